#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <cmath>
#include <string>
#include <vector>

#include "wbe/core/grids.hpp"
#include "wbe/core/types.hpp"

namespace wbe {

struct HelmholtzConfig {
    double box = 1.0;           // half-width of the undamped computational square
    int refine = 1;             // solver cells per medium pixel
    int pml_width = 10;         // absorbing collar thickness, in mesh points
    int pml_order = 2;
    double pml_intensity = 80.0;
    double solver_tol = 1e-8;   // relative residual contract on every solve
    bool cubic_medium = false;  // smooth upsample when refine > 1
    double min_ppw = 6.0;       // below this points-per-wavelength, flag the solve
};

struct Field {
    Eigen::MatrixXcd u;  // scattered field over the full mesh, row = y index
    double omega = 0.0;
    int source = 0;
    double residual = 0.0;
    double ppw = 0.0;
    bool low_resolution = false;
};

// Scattered-field Helmholtz solve on a cell-centered square mesh. The medium
// sits in [-0.5,0.5]^2, the undamped region is [-box,box]^2, and an absorbing
// collar of pml_width points surrounds it with complex coordinate stretching
// 1 + i*sigma/omega, sigma ramping polynomially across the collar. One
// factorization serves every incident direction.
class HelmholtzSolver {
public:
    HelmholtzSolver(const Eigen::MatrixXd& medium, double omega, const Grids& g,
                    const HelmholtzConfig& cfg)
        : omega_(omega), g_(g), cfg_(cfg) {
        if (omega <= 0.0) throw config_error("helmholtz: frequency must be positive");
        if (cfg.pml_width < 10) throw config_error("helmholtz: pml width must be at least 10");
        if (cfg.box <= g.R)
            throw config_error("helmholtz: receiver circle must be interior to the domain");
        if (cfg.refine < 1) throw config_error("helmholtz: refine must be positive");
        if (medium.rows() != g.n_eta || medium.cols() != g.n_eta)
            throw config_error("helmholtz: medium side disagrees with the grid");
        hs_ = 1.0 / (double(g.n_eta) * cfg.refine);
        double cells = 2.0 * cfg.box * g.n_eta * cfg.refine;
        n_int_ = int(std::lround(cells));
        if (std::abs(cells - n_int_) > 1e-9)
            throw config_error("helmholtz: domain half-width must be a whole number of cells");
        n_tot_ = n_int_ + 2 * cfg.pml_width;

        eta_ = Eigen::MatrixXd::Zero(n_tot_, n_tot_);
        for (int iy = 0; iy < n_tot_; ++iy)
            for (int ix = 0; ix < n_tot_; ++ix)
                eta_(iy, ix) = medium_value(medium, node(ix), node(iy));

        assemble();
        lu_.compute(a_);
        if (lu_.info() != Eigen::Success)
            throw numeric_error("helmholtz: factorization failed");
    }

    double spacing() const { return hs_; }
    int total() const { return n_tot_; }
    double node(int k) const { return -cfg_.box + (k - cfg_.pml_width + 0.5) * hs_; }
    const Eigen::MatrixXd& mesh_medium() const { return eta_; }

    Field solve(int s_index) const {
        double ang = g_.angle(s_index);
        double sx = std::cos(ang), sy = std::sin(ang);
        Eigen::VectorXcd b(std::size_t(n_tot_) * n_tot_);
        for (int iy = 0; iy < n_tot_; ++iy)
            for (int ix = 0; ix < n_tot_; ++ix) {
                double phase = omega_ * (sx * node(ix) + sy * node(iy));
                b(idx(ix, iy)) = -omega_ * omega_ * eta_(iy, ix) *
                                 cplx_t(std::cos(phase), std::sin(phase));
            }
        Field f;
        f.omega = omega_;
        f.source = s_index;
        f.ppw = 2.0 * pi / (omega_ * hs_);
        f.low_resolution = f.ppw < cfg_.min_ppw;
        double bn = b.norm();
        if (bn == 0.0) {
            f.u = Eigen::MatrixXcd::Zero(n_tot_, n_tot_);
            return f;
        }
        Eigen::VectorXcd u = lu_.solve(b);
        if (lu_.info() != Eigen::Success) throw numeric_error("helmholtz: solve failed");
        f.residual = (a_ * u - b).norm() / bn;
        if (!(f.residual <= cfg_.solver_tol))
            throw numeric_error("helmholtz: residual " + std::to_string(f.residual) +
                                " misses tolerance");
        f.u = Eigen::MatrixXcd(n_tot_, n_tot_);
        for (int iy = 0; iy < n_tot_; ++iy)
            for (int ix = 0; ix < n_tot_; ++ix) f.u(iy, ix) = u(idx(ix, iy));
        return f;
    }

    // Bilinear probe of a mesh field at a physical point.
    cplx_t sample(const Eigen::MatrixXcd& u, double x, double y) const {
        double fx = (x - node(0)) / hs_, fy = (y - node(0)) / hs_;
        int ix = std::clamp(int(std::floor(fx)), 0, n_tot_ - 2);
        int iy = std::clamp(int(std::floor(fy)), 0, n_tot_ - 2);
        double tx = fx - ix, ty = fy - iy;
        return (1 - ty) * ((1 - tx) * u(iy, ix) + tx * u(iy, ix + 1)) +
               ty * ((1 - tx) * u(iy + 1, ix) + tx * u(iy + 1, ix + 1));
    }

private:
    std::size_t idx(int ix, int iy) const { return std::size_t(iy) * n_tot_ + ix; }

    double sigma(double t) const {
        double d = std::abs(t) - cfg_.box;
        if (d <= 0.0) return 0.0;
        return cfg_.pml_intensity * std::pow(d / (cfg_.pml_width * hs_), cfg_.pml_order);
    }

    cplx_t stretch(double t) const { return cplx_t(1.0, sigma(t) / omega_); }

    double medium_value(const Eigen::MatrixXd& m, double x, double y) const {
        int n = g_.n_eta;
        if (!cfg_.cubic_medium) {
            int ix = int(std::floor((x + 0.5) * n));
            int iy = int(std::floor((y + 0.5) * n));
            if (ix < 0 || ix >= n || iy < 0 || iy >= n) return 0.0;
            return m(iy, ix);
        }
        auto taps = [&](double u, int* i0, double* w) {
            double p = u - 0.5;
            *i0 = int(std::floor(p));
            double t = p - *i0;
            w[0] = ((-0.5 * t + 1.0) * t - 0.5) * t;
            w[1] = (1.5 * t - 2.5) * t * t + 1.0;
            w[2] = ((-1.5 * t + 2.0) * t + 0.5) * t;
            w[3] = (0.5 * t - 0.5) * t * t;
        };
        int jx, jy;
        double wx[4], wy[4];
        taps((x + 0.5) * n, &jx, wx);
        taps((y + 0.5) * n, &jy, wy);
        double acc = 0.0;
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b) {
                int ix = jx - 1 + b, iy = jy - 1 + a;
                if (ix < 0 || ix >= n || iy < 0 || iy >= n) continue;
                acc += wy[a] * wx[b] * m(iy, ix);
            }
        return acc;
    }

    // Five-point stencil of the stretched equation
    //   d/dx((sy/sx) du/dx) + d/dy((sx/sy) du/dy) + sx sy w^2 (1+eta) u = sx sy f
    // with half-point stretch factors on the links and a zero wall behind the
    // collar.
    void assemble() {
        double h2 = hs_ * hs_;
        std::vector<Eigen::Triplet<cplx_t>> trip;
        trip.reserve(std::size_t(n_tot_) * n_tot_ * 5);
        for (int iy = 0; iy < n_tot_; ++iy) {
            double y = node(iy);
            cplx_t sy = stretch(y);
            for (int ix = 0; ix < n_tot_; ++ix) {
                double x = node(ix);
                cplx_t sx = stretch(x);
                cplx_t axp = sy / stretch(x + 0.5 * hs_);
                cplx_t axm = sy / stretch(x - 0.5 * hs_);
                cplx_t ayp = sx / stretch(y + 0.5 * hs_);
                cplx_t aym = sx / stretch(y - 0.5 * hs_);
                cplx_t diag = -(axp + axm + ayp + aym) / h2 +
                              sx * sy * omega_ * omega_ * (1.0 + eta_(iy, ix));
                std::size_t p = idx(ix, iy);
                trip.emplace_back(int(p), int(p), diag);
                if (ix + 1 < n_tot_) trip.emplace_back(int(p), int(idx(ix + 1, iy)), axp / h2);
                if (ix > 0) trip.emplace_back(int(p), int(idx(ix - 1, iy)), axm / h2);
                if (iy + 1 < n_tot_) trip.emplace_back(int(p), int(idx(ix, iy + 1)), ayp / h2);
                if (iy > 0) trip.emplace_back(int(p), int(idx(ix, iy - 1)), aym / h2);
            }
        }
        a_.resize(Eigen::Index(n_tot_) * n_tot_, Eigen::Index(n_tot_) * n_tot_);
        a_.setFromTriplets(trip.begin(), trip.end());
        a_.makeCompressed();
    }

    double omega_;
    Grids g_;
    HelmholtzConfig cfg_;
    double hs_ = 0.0;
    int n_int_ = 0, n_tot_ = 0;
    Eigen::MatrixXd eta_;
    Eigen::SparseMatrix<cplx_t> a_;
    Eigen::SparseLU<Eigen::SparseMatrix<cplx_t>, Eigen::COLAMDOrdering<int>> lu_;
};

} // namespace wbe
