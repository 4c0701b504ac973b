#pragma once

#include <Eigen/Dense>

#include "wbe/core/grids.hpp"

namespace wbe {

// Receiver/source phase table A[m, p] = exp(-i*omega* r_m . y_p) over the
// medium pixels p (row-major over (iy, ix)).
inline Eigen::MatrixXcd direction_phases(double omega, const Grids& g) {
    int np = g.n_eta * g.n_eta;
    Eigen::MatrixXcd a(g.n_sc, np);
    for (int m = 0; m < g.n_sc; ++m) {
        double cx = std::cos(g.angle(m)), cy = std::sin(g.angle(m));
        for (int iy = 0; iy < g.n_eta; ++iy)
            for (int ix = 0; ix < g.n_eta; ++ix) {
                double phase = -omega * (cx * g.pix(ix) + cy * g.pix(iy));
                a(m, iy * g.n_eta + ix) = cplx_t(std::cos(phase), std::sin(phase));
            }
    }
    return a;
}

// Normalized Born prediction of the far field:
//   Lambda[m, n] = h^2 * sum_p exp(-i*omega*(r_m - s_n) . y_p) * eta_p,
// the plane-wave-to-plane-wave linearization with the normalization
// constant already divided out. Rows index receivers, columns sources.
inline Eigen::MatrixXcd apply_F(const Eigen::MatrixXd& eta, double omega, const Grids& g) {
    if (eta.rows() != g.n_eta || eta.cols() != g.n_eta)
        throw config_error("medium does not match the pixel grid");
    Eigen::MatrixXcd a = direction_phases(omega, g);
    Eigen::VectorXd ev(g.n_eta * g.n_eta);
    for (int iy = 0; iy < g.n_eta; ++iy)
        for (int ix = 0; ix < g.n_eta; ++ix) ev(iy * g.n_eta + ix) = eta(iy, ix);
    double h2 = g.h() * g.h();
    return h2 * (a * ev.asDiagonal() * a.adjoint());
}

} // namespace wbe
