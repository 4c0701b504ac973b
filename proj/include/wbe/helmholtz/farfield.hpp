#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "wbe/helmholtz/solver.hpp"

namespace wbe {

struct FarField {
    Eigen::MatrixXcd values;  // rows = receiver angle, cols = source angle
    double omega = 0.0;
    double R = 0.0;
    bool normalized = false;
};

// Leading-order outgoing-wave constant relating the sampled scattered field
// at radius R to the far-field pattern.
inline cplx_t far_field_constant(double omega, double R) {
    cplx_t eighth_turn(std::cos(pi / 4), std::sin(pi / 4));
    cplx_t carrier(std::cos(omega * R), std::sin(omega * R));
    return eighth_turn / std::sqrt(8.0 * pi * omega) * omega * omega * carrier / std::sqrt(R);
}

// One scattered-field solve per source direction; receivers sample the mesh
// on the circle of radius R.
inline FarField far_field(const Eigen::MatrixXd& medium, double omega, const Grids& g,
                          const HelmholtzConfig& cfg) {
    HelmholtzSolver solver(medium, omega, g, cfg);
    FarField ff;
    ff.omega = omega;
    ff.R = g.R;
    ff.values.resize(g.n_sc, g.n_sc);
    for (int n = 0; n < g.n_sc; ++n) {
        Field f = solver.solve(n);
        for (int m = 0; m < g.n_sc; ++m)
            ff.values(m, n) =
                solver.sample(f.u, g.R * std::cos(g.angle(m)), g.R * std::sin(g.angle(m)));
    }
    return ff;
}

inline FarField normalize(const FarField& ff) {
    if (ff.normalized) throw config_error("far field is already normalized");
    FarField out = ff;
    out.values /= far_field_constant(ff.omega, ff.R);
    out.normalized = true;
    return out;
}

} // namespace wbe
