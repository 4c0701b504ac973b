#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <numeric>
#include <vector>

#include "wbe/core/types.hpp"

namespace wbe {

enum class Dtype : std::uint32_t { f64 = 1, c128 = 2 };

// Dense row-major n-d array, real or complex. This is the interchange type
// for files and checkpoints; numerical kernels work on Eigen matrices and
// convert at the boundary.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Dtype dt, std::vector<std::uint64_t> dims) {
        Tensor t;
        t.dtype_ = dt;
        t.dims_ = std::move(dims);
        std::size_t n = t.numel();
        if (dt == Dtype::f64) t.rdata_.assign(n, 0.0);
        else t.cdata_.assign(n, cplx_t(0.0, 0.0));
        return t;
    }

    static Tensor from_matrix(const Eigen::MatrixXd& m) {
        Tensor t = zeros(Dtype::f64, {std::uint64_t(m.rows()), std::uint64_t(m.cols())});
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j)
                t.rdata_[std::size_t(i) * m.cols() + j] = m(i, j);
        return t;
    }

    static Tensor from_matrix(const Eigen::MatrixXcd& m) {
        Tensor t = zeros(Dtype::c128, {std::uint64_t(m.rows()), std::uint64_t(m.cols())});
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j)
                t.cdata_[std::size_t(i) * m.cols() + j] = m(i, j);
        return t;
    }

    static Tensor from_vector(std::vector<double> v) {
        Tensor t;
        t.dtype_ = Dtype::f64;
        t.dims_ = {std::uint64_t(v.size())};
        t.rdata_ = std::move(v);
        return t;
    }

    Dtype dtype() const { return dtype_; }
    const std::vector<std::uint64_t>& dims() const { return dims_; }
    std::size_t ndim() const { return dims_.size(); }

    std::size_t numel() const {
        std::size_t n = 1;
        for (auto d : dims_) n *= std::size_t(d);
        return dims_.empty() ? 0 : n;
    }

    std::vector<double>& real_data() { return rdata_; }
    const std::vector<double>& real_data() const { return rdata_; }
    std::vector<cplx_t>& cplx_data() { return cdata_; }
    const std::vector<cplx_t>& cplx_data() const { return cdata_; }

    // Slice of a leading-axis stack: element block k of dims [N, r, c].
    Eigen::MatrixXd slice_matrix(std::size_t k) const {
        check_stack();
        std::size_t r = dims_[1], c = dims_[2];
        Eigen::MatrixXd m(r, c);
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j)
                m(i, j) = rdata_[(k * r + i) * c + j];
        return m;
    }

    Eigen::MatrixXcd slice_cmatrix(std::size_t k) const {
        check_stack();
        std::size_t r = dims_[1], c = dims_[2];
        Eigen::MatrixXcd m(r, c);
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j)
                m(i, j) = cdata_[(k * r + i) * c + j];
        return m;
    }

    void set_slice(std::size_t k, const Eigen::MatrixXd& m) {
        check_stack();
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j)
                rdata_[(k * dims_[1] + i) * dims_[2] + j] = m(i, j);
    }

    void set_slice(std::size_t k, const Eigen::MatrixXcd& m) {
        check_stack();
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j)
                cdata_[(k * dims_[1] + i) * dims_[2] + j] = m(i, j);
    }

    Eigen::MatrixXd to_matrix() const {
        if (ndim() != 2 || dtype_ != Dtype::f64)
            throw format_error("tensor is not a 2-d real matrix");
        Eigen::MatrixXd m(dims_[0], dims_[1]);
        for (std::size_t i = 0; i < dims_[0]; ++i)
            for (std::size_t j = 0; j < dims_[1]; ++j)
                m(i, j) = rdata_[i * dims_[1] + j];
        return m;
    }

    Eigen::MatrixXcd to_cmatrix() const {
        if (ndim() != 2 || dtype_ != Dtype::c128)
            throw format_error("tensor is not a 2-d complex matrix");
        Eigen::MatrixXcd m(dims_[0], dims_[1]);
        for (std::size_t i = 0; i < dims_[0]; ++i)
            for (std::size_t j = 0; j < dims_[1]; ++j)
                m(i, j) = cdata_[i * dims_[1] + j];
        return m;
    }

private:
    void check_stack() const {
        if (ndim() != 3) throw format_error("tensor is not a 3-d stack");
    }

    Dtype dtype_ = Dtype::f64;
    std::vector<std::uint64_t> dims_;
    std::vector<double> rdata_;
    std::vector<cplx_t> cdata_;
};

} // namespace wbe
