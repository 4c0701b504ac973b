#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <vector>

#include "wbe/core/grids.hpp"

namespace wbe {

// Precomputed polar-to-Cartesian resampling: separable 3-point Lagrange
// (quadratic) interpolation in rho and theta, periodic in theta, with rho
// clamped at the outermost ring for corner pixels beyond it. The map is a
// fixed sparse linear operator, which also makes its transpose available
// for gradient propagation.
class PolarCartMap {
public:
    PolarCartMap() = default;

    PolarCartMap(const Grids& g) : n_eta_(g.n_eta), n_theta_(g.n_theta()), n_rho_(g.n_rho) {
        if (g.n_rho < 3 || g.n_theta() < 3)
            throw config_error("polar grid too small for quadratic interpolation");
        double rho_max = g.rho(g.n_rho - 1);
        entries_.reserve(std::size_t(n_eta_) * n_eta_ * 9);
        for (int iy = 0; iy < n_eta_; ++iy) {
            for (int ix = 0; ix < n_eta_; ++ix) {
                double x = g.pix(ix), y = g.pix(iy);
                double rho = std::min(std::hypot(x, y), rho_max);
                double theta = std::atan2(y, x);
                if (theta < 0) theta += 2.0 * pi;

                // rho stencil: three consecutive rings around the target.
                double u = rho * 2.0 * n_rho_;
                int ib = std::clamp(int(std::lround(u)), 1, n_rho_ - 2);
                double du = u - ib;
                std::array<double, 3> wr = {0.5 * du * (du - 1.0), (1.0 - du) * (1.0 + du),
                                            0.5 * du * (du + 1.0)};

                // theta stencil: three consecutive angles, periodic wrap.
                double v = theta * n_theta_ / (2.0 * pi);
                int jb = int(std::lround(v));
                double dv = v - jb;
                std::array<double, 3> wt = {0.5 * dv * (dv - 1.0), (1.0 - dv) * (1.0 + dv),
                                            0.5 * dv * (dv + 1.0)};

                int pix = iy * n_eta_ + ix;
                for (int a = 0; a < 3; ++a) {
                    int jt = ((jb + a - 1) % n_theta_ + n_theta_) % n_theta_;
                    for (int b = 0; b < 3; ++b) {
                        int ir = ib + b - 1;
                        double w = wt[a] * wr[b];
                        if (w != 0.0) entries_.push_back({pix, jt * n_rho_ + ir, w});
                    }
                }
            }
        }
    }

    int n_eta() const { return n_eta_; }
    int n_theta() const { return n_theta_; }
    int n_rho() const { return n_rho_; }

    // alpha is (n_theta x n_rho); result is the (n_eta x n_eta) resampling.
    template <typename Scalar>
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>
    apply(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& alpha) const {
        if (alpha.rows() != n_theta_ || alpha.cols() != n_rho_)
            throw config_error("polar field does not match the interpolation map");
        Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out =
            Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(n_eta_, n_eta_);
        for (const auto& e : entries_)
            out(e.pix / n_eta_, e.pix % n_eta_) +=
                Scalar(e.w) * alpha(e.src / n_rho_, e.src % n_rho_);
        return out;
    }

    // Transpose action: scatter a Cartesian field back to polar nodes.
    Eigen::MatrixXd apply_transpose(const Eigen::MatrixXd& cart) const {
        Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n_theta_, n_rho_);
        for (const auto& e : entries_)
            out(e.src / n_rho_, e.src % n_rho_) += e.w * cart(e.pix / n_eta_, e.pix % n_eta_);
        return out;
    }

    struct Entry {
        int pix;   // n_eta*iy + ix
        int src;   // n_rho*jt + ir
        double w;
    };
    const std::vector<Entry>& entries() const { return entries_; }

private:
    int n_eta_ = 0, n_theta_ = 0, n_rho_ = 0;
    std::vector<Entry> entries_;
};

inline Eigen::MatrixXd polar_to_cart(const Eigen::MatrixXd& alpha, const Grids& g) {
    return PolarCartMap(g).apply(alpha);
}

inline Eigen::MatrixXcd polar_to_cart(const Eigen::MatrixXcd& alpha, const Grids& g) {
    return PolarCartMap(g).apply(alpha);
}

} // namespace wbe
