#pragma once

#include <Eigen/Dense>

#include "wbe/born/kernel.hpp"
#include "wbe/core/grids.hpp"

namespace wbe {

// Cyclic diagonal shift of far-field data: rotating the scattering scene by
// theta_j advances both the source and receiver angles, which on the shared
// angle grid is the index map below. A pure gather, hence exact.
template <typename Derived>
inline typename Derived::PlainObject shift_data(const Eigen::MatrixBase<Derived>& lam, int j) {
    int n = int(lam.rows());
    typename Derived::PlainObject out(n, n);
    int jj = ((j % n) + n) % n;
    for (int m = 0; m < n; ++m)
        for (int c = 0; c < n; ++c) out(m, c) = lam((m + jj) % n, (c + jj) % n);
    return out;
}

// Back-projection to the polar grid, matrix-product form: row j is the
// diagonal of K^* Lambda_j K scaled by the angular quadrature weight,
// where Lambda_j is the data shifted by j. Forms the full small products.
inline Eigen::MatrixXcd adjoint_impl2(const Eigen::MatrixXcd& lam, const Kernel& k,
                                      const Grids& g) {
    if (lam.rows() != g.n_sc || lam.cols() != g.n_sc)
        throw config_error("far-field data does not match the angle grid");
    double w = (2.0 * pi / g.n_sc) * (2.0 * pi / g.n_sc);
    Eigen::MatrixXcd alpha(g.n_theta(), g.n_rho);
    for (int j = 0; j < g.n_theta(); ++j) {
        Eigen::MatrixXcd lj = shift_data(lam, j);
        Eigen::MatrixXcd p = k.K.adjoint() * lj * k.K;
        alpha.row(j) = w * p.diagonal().transpose();
    }
    return alpha;
}

// Same value by the cosine/sine split: with Lambda = LR + i*LI and
// K = C - i*S, the real part of diag(K^* Lambda_j K) expands into four
// Hadamard/product terms, each a row-sum of an elementwise product. This
// form never touches complex arithmetic and is the template the trainable
// model replaces with learned weights.
inline Eigen::MatrixXd adjoint_impl1(const Eigen::MatrixXcd& lam, const Kernel& k,
                                     const Grids& g) {
    if (lam.rows() != g.n_sc || lam.cols() != g.n_sc)
        throw config_error("far-field data does not match the angle grid");
    double w = (2.0 * pi / g.n_sc) * (2.0 * pi / g.n_sc);
    Eigen::MatrixXd lr = lam.real(), li = lam.imag();
    Eigen::MatrixXd alpha(g.n_theta(), g.n_rho);
    for (int j = 0; j < g.n_theta(); ++j) {
        Eigen::MatrixXd lrj = shift_data(lr, j);
        Eigen::MatrixXd lij = shift_data(li, j);
        Eigen::RowVectorXd row =
            (k.C.cwiseProduct(lrj * k.C)).colwise().sum() +
            (k.S.cwiseProduct(lrj * k.S)).colwise().sum() +
            (k.C.cwiseProduct(lij * k.S)).colwise().sum() -
            (k.S.cwiseProduct(lij * k.C)).colwise().sum();
        alpha.row(j) = w * row;
    }
    return alpha;
}

} // namespace wbe
