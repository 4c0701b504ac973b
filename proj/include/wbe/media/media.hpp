#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "wbe/core/grids.hpp"
#include "wbe/core/rng.hpp"
#include "wbe/core/types.hpp"

namespace wbe {

// Media are n_eta x n_eta grids of the compressibility perturbation eta,
// sampled at cell centers of [-1/2,1/2]^2. Element (iy, ix) sits at
// (x, y) = (pix(ix), pix(iy)); row index follows y upward. All generators
// keep the outer one-pixel ring exactly zero and |eta| bounded by 1.

inline void zero_outer_ring(Eigen::MatrixXd& m) {
    int n = int(m.rows());
    m.row(0).setZero();
    m.row(n - 1).setZero();
    m.col(0).setZero();
    m.col(n - 1).setZero();
}

inline void validate_medium(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols() || m.rows() < 4) throw config_error("medium grid must be square");
    if (m.cwiseAbs().maxCoeff() > 1.0 + 1e-12)
        throw numeric_error("medium contrast exceeds 1");
    int n = int(m.rows());
    double ring = m.row(0).cwiseAbs().sum() + m.row(n - 1).cwiseAbs().sum() +
                  m.col(0).cwiseAbs().sum() + m.col(n - 1).cwiseAbs().sum();
    if (ring != 0.0) throw numeric_error("medium outer ring is not zero");
}

// ---- Shepp-Logan head phantom ----

struct PhantomEllipse {
    double value, a, b, x0, y0, phi_deg;
};

// The canonical ten-ellipse table on [-1,1]^2 coordinates.
inline const std::vector<PhantomEllipse>& shepp_logan_table() {
    static const std::vector<PhantomEllipse> t = {
        {2.00, 0.6900, 0.9200, 0.00, 0.0000, 0.0},
        {-0.98, 0.6624, 0.8740, 0.00, -0.0184, 0.0},
        {-0.02, 0.1100, 0.3100, 0.22, 0.0000, -18.0},
        {-0.02, 0.1600, 0.4100, -0.22, 0.0000, 18.0},
        {0.01, 0.2100, 0.2500, 0.00, 0.3500, 0.0},
        {0.01, 0.0460, 0.0460, 0.00, 0.1000, 0.0},
        {0.01, 0.0460, 0.0460, 0.00, -0.1000, 0.0},
        {0.01, 0.0460, 0.0230, -0.08, -0.6050, 0.0},
        {0.01, 0.0230, 0.0230, 0.00, -0.6050, 0.0},
        {0.01, 0.0230, 0.0460, 0.06, -0.6050, 0.0},
    };
    return t;
}

inline Eigen::MatrixXd gen_shepp_logan(int n_eta, double contrast_scale) {
    if (n_eta < 16) throw config_error("shepp-logan needs n_eta >= 16");
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n_eta, n_eta);
    for (int iy = 0; iy < n_eta; ++iy) {
        for (int ix = 0; ix < n_eta; ++ix) {
            // Phantom coordinates span [-1,1]; the medium domain is half that.
            double u = 2.0 * (-0.5 + (ix + 0.5) / n_eta);
            double v = 2.0 * (-0.5 + (iy + 0.5) / n_eta);
            double s = 0.0;
            for (const auto& e : shepp_logan_table()) {
                double c = std::cos(e.phi_deg * pi / 180.0);
                double sn = std::sin(e.phi_deg * pi / 180.0);
                double du = u - e.x0, dv = v - e.y0;
                double p = (du * c + dv * sn) / e.a;
                double q = (-du * sn + dv * c) / e.b;
                if (p * p + q * q <= 1.0) s += e.value;
            }
            m(iy, ix) = s;
        }
    }
    double mx = m.cwiseAbs().maxCoeff();
    if (mx > 0.0) m *= contrast_scale / mx;
    zero_outer_ring(m);
    return m;
}

// ---- smooth random blobs ----

// Normalized 1-d Gaussian taps, truncated at 4 sigma.
inline std::vector<double> gaussian_taps(double sigma_px) {
    if (sigma_px <= 0.0) throw config_error("gaussian sigma must be positive");
    int w = int(std::floor(4.0 * sigma_px));
    std::vector<double> g(2 * w + 1);
    double s = 0.0;
    for (int d = -w; d <= w; ++d) {
        g[d + w] = std::exp(-0.5 * d * d / (sigma_px * sigma_px));
        s += g[d + w];
    }
    for (auto& v : g) v /= s;
    return g;
}

// Separable convolution with the truncated Gaussian, zero beyond the grid.
inline Eigen::MatrixXd smooth_field(const Eigen::MatrixXd& spikes, double sigma_px) {
    int n = int(spikes.rows());
    auto g = gaussian_taps(sigma_px);
    int w = int(g.size() / 2);
    Eigen::MatrixXd tmp = Eigen::MatrixXd::Zero(n, n);
    for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix) {
            double acc = 0.0;
            for (int d = -w; d <= w; ++d) {
                int j = ix + d;
                if (j >= 0 && j < n) acc += g[d + w] * spikes(iy, j);
            }
            tmp(iy, ix) = acc;
        }
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
    for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix) {
            double acc = 0.0;
            for (int d = -w; d <= w; ++d) {
                int j = iy + d;
                if (j >= 0 && j < n) acc += g[d + w] * tmp(j, ix);
            }
            out(iy, ix) = acc;
        }
    return out;
}

inline Eigen::MatrixXd gen_random_smooth(int n_eta, int n_points, double sigma_px,
                                         double amp, Rng& rng) {
    if (n_eta < 8) throw config_error("smooth medium needs n_eta >= 8");
    if (n_points < 1) throw config_error("smooth medium needs at least one spike");
    Eigen::MatrixXd spikes = Eigen::MatrixXd::Zero(n_eta, n_eta);
    for (int k = 0; k < n_points; ++k) {
        int ix = 1 + int(rng.uniform_index(std::uint64_t(n_eta - 2)));
        int iy = 1 + int(rng.uniform_index(std::uint64_t(n_eta - 2)));
        spikes(iy, ix) += rng.uniform(-amp, amp);
    }
    Eigen::MatrixXd m = smooth_field(spikes, sigma_px);
    zero_outer_ring(m);
    return m;
}

// ---- triangle scatterers ----

inline Eigen::MatrixXd gen_triangles(int n_eta, int count, double side_px,
                                     double contrast, Rng& rng) {
    if (side_px < 2.0) throw config_error("triangle side must be at least 2 pixels");
    if (count < 1) throw config_error("triangle count must be positive");
    double rc = side_px / std::sqrt(3.0);  // circumradius
    double lo = 1.0 + rc, hi = double(n_eta - 2) - rc;
    if (hi <= lo) throw config_error("triangles do not fit inside the medium interior");

    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n_eta, n_eta);
    for (int t = 0; t < count; ++t) {
        double cx = rng.uniform(lo, hi);
        double cy = rng.uniform(lo, hi);
        double phi = rng.uniform(0.0, 2.0 * pi);
        double vx[3], vy[3];
        for (int k = 0; k < 3; ++k) {
            vx[k] = cx + rc * std::cos(phi + 2.0 * pi * k / 3.0);
            vy[k] = cy + rc * std::sin(phi + 2.0 * pi * k / 3.0);
        }
        int x0 = std::max(0, int(std::floor(cx - rc - 1)));
        int x1 = std::min(n_eta - 1, int(std::ceil(cx + rc + 1)));
        int y0 = std::max(0, int(std::floor(cy - rc - 1)));
        int y1 = std::min(n_eta - 1, int(std::ceil(cy + rc + 1)));
        for (int iy = y0; iy <= y1; ++iy) {
            for (int ix = x0; ix <= x1; ++ix) {
                // Half-plane test against the three edges, in pixel units.
                double sgn[3];
                for (int k = 0; k < 3; ++k) {
                    int k2 = (k + 1) % 3;
                    sgn[k] = (vx[k2] - vx[k]) * (iy - vy[k]) - (vy[k2] - vy[k]) * (ix - vx[k]);
                }
                bool inside = (sgn[0] >= 0 && sgn[1] >= 0 && sgn[2] >= 0) ||
                              (sgn[0] <= 0 && sgn[1] <= 0 && sgn[2] <= 0);
                if (inside && iy >= 0 && iy < n_eta && ix >= 0 && ix < n_eta)
                    m(iy, ix) = std::max(m(iy, ix), contrast);
            }
        }
    }
    zero_outer_ring(m);
    return m;
}

// ---- exact quarter-turn rotation ----

// Counterclockwise rotation by quarter_turns * 90 degrees; a pure index
// permutation, so four turns restore the input bit-for-bit.
inline Eigen::MatrixXd rotate_medium(const Eigen::MatrixXd& m, int quarter_turns) {
    int n = int(m.rows());
    if (m.cols() != n) throw config_error("rotate_medium needs a square grid");
    int q = ((quarter_turns % 4) + 4) % 4;
    if (q == 0) return m;
    Eigen::MatrixXd out(n, n);
    for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix) {
            if (q == 1) out(iy, ix) = m(n - 1 - ix, iy);
            else if (q == 2) out(iy, ix) = m(n - 1 - iy, n - 1 - ix);
            else out(iy, ix) = m(ix, n - 1 - iy);
        }
    return out;
}

// Rescale so the largest magnitude becomes target (no-op on a zero field).
inline void rescale_max_abs(Eigen::MatrixXd& m, double target) {
    double mx = m.cwiseAbs().maxCoeff();
    if (mx > 0.0) m *= target / mx;
}

} // namespace wbe
