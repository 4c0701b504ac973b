#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "wbe/core/grids.hpp"

namespace wbe {

// Oscillatory back-projection kernel on the polar grid,
//   K[m, i] = exp(-i * omega * rho_i * cos t_m),  t_m = 2*pi*m/n_sc,
// together with its real and imaginary building blocks
//   C = cos(omega * rho * cos t),  S = sin(omega * rho * cos t),
// so K = C - i*S.
struct Kernel {
    double omega = 0.0;
    Eigen::MatrixXcd K;  // n_sc x n_rho
    Eigen::MatrixXd C;
    Eigen::MatrixXd S;
};

inline Kernel build_kernel(double omega, const Grids& g) {
    Kernel k;
    k.omega = omega;
    k.K.resize(g.n_sc, g.n_rho);
    k.C.resize(g.n_sc, g.n_rho);
    k.S.resize(g.n_sc, g.n_rho);
    for (int m = 0; m < g.n_sc; ++m) {
        double t = g.angle(m);
        for (int i = 0; i < g.n_rho; ++i) {
            double phase = omega * g.rho(i) * std::cos(t);
            k.C(m, i) = std::cos(phase);
            k.S(m, i) = std::sin(phase);
            k.K(m, i) = cplx_t(k.C(m, i), -k.S(m, i));
        }
    }
    return k;
}

} // namespace wbe
