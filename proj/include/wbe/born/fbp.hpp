#pragma once

#include <Eigen/Dense>
#include <vector>

#include "wbe/born/adjoint.hpp"
#include "wbe/born/forward.hpp"
#include "wbe/born/interp.hpp"
#include "wbe/core/grids.hpp"
#include "wbe/core/rng.hpp"

namespace wbe {

// One-frequency linearized scattering operator with cached phase tables,
// plus the compositions used by filtered back-projection.
class BornOperator {
public:
    BornOperator(double omega, const Grids& g, const PolarCartMap& map)
        : g_(g), map_(&map), k_(build_kernel(omega, g)),
          phases_(direction_phases(omega, g)), h2_(g.h() * g.h()) {}

    const Kernel& kernel() const { return k_; }
    double omega() const { return k_.omega; }

    Eigen::MatrixXcd forward(const Eigen::MatrixXd& eta) const {
        Eigen::VectorXd ev = flatten(eta);
        return h2_ * (phases_ * ev.asDiagonal() * phases_.adjoint());
    }

    // Cartesian-grid back-projection: polar adjoint then resampling.
    Eigen::MatrixXd back_project(const Eigen::MatrixXcd& lam) const {
        Eigen::MatrixXd alpha = adjoint_impl2(lam, k_, g_).real();
        return map_->apply(alpha);
    }

    // Normal-operator action F^* F on the pixel grid.
    Eigen::MatrixXd normal(const Eigen::MatrixXd& eta) const {
        return back_project(forward(eta));
    }

private:
    Eigen::VectorXd flatten(const Eigen::MatrixXd& eta) const {
        Eigen::VectorXd ev(g_.n_eta * g_.n_eta);
        for (int iy = 0; iy < g_.n_eta; ++iy)
            for (int ix = 0; ix < g_.n_eta; ++ix) ev(iy * g_.n_eta + ix) = eta(iy, ix);
        return ev;
    }

    Grids g_;
    const PolarCartMap* map_;
    Kernel k_;
    Eigen::MatrixXcd phases_;
    double h2_;
};

// Wide-band normal operator: sum of per-frequency F^* F compositions.
inline Eigen::MatrixXd apply_normal(const Eigen::MatrixXd& eta,
                                    const std::vector<double>& omegas, const Grids& g) {
    PolarCartMap map(g);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(g.n_eta, g.n_eta);
    for (double w : omegas) out += BornOperator(w, g, map).normal(eta);
    return out;
}

struct FbpConfig {
    double epsilon = 1e-2;          // Tikhonov weight
    bool epsilon_absolute = false;  // interpret epsilon as-is instead of
                                    // relative to the top-eigenvalue estimate
    double cg_tol = 1e-6;
    int cg_max_iters = 400;
    int power_iters = 20;
    std::uint64_t seed = 0x5EED;
};

struct FbpFrequencyReport {
    double omega = 0.0;
    double epsilon_used = 0.0;
    double lambda_max = 0.0;
    int iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;
};

struct FbpResult {
    Eigen::MatrixXd eta;
    std::vector<FbpFrequencyReport> per_frequency;
    bool converged = true;
};

// Largest-eigenvalue estimate of the (near-symmetric) normal operator by
// power iteration from a seeded random start.
inline double estimate_lambda_max(const BornOperator& op, const Grids& g, int iters,
                                  std::uint64_t seed) {
    Rng rng(seed);
    Eigen::MatrixXd v(g.n_eta, g.n_eta);
    for (int iy = 0; iy < g.n_eta; ++iy)
        for (int ix = 0; ix < g.n_eta; ++ix) v(iy, ix) = rng.uniform(-1.0, 1.0);
    v /= v.norm();
    double lambda = 0.0;
    for (int it = 0; it < iters; ++it) {
        Eigen::MatrixXd av = op.normal(v);
        lambda = av.norm();
        if (lambda == 0.0) return 0.0;
        v = av / lambda;
    }
    return lambda;
}

// Tikhonov-regularized least squares per frequency,
//   (F^*F + eps I) eta = F^* Lambda,
// solved by conjugate gradients on the pixel grid; the wide-band estimate
// averages the per-frequency solutions.
inline FbpResult fbp_reconstruct(const std::vector<Eigen::MatrixXcd>& data,
                                 const std::vector<double>& omegas, const FbpConfig& cfg,
                                 const Grids& g) {
    if (data.size() != omegas.size() || data.empty())
        throw config_error("fbp needs one data matrix per frequency");
    PolarCartMap map(g);
    FbpResult res;
    res.eta = Eigen::MatrixXd::Zero(g.n_eta, g.n_eta);

    for (std::size_t q = 0; q < omegas.size(); ++q) {
        BornOperator op(omegas[q], g, map);
        FbpFrequencyReport rep;
        rep.omega = omegas[q];
        rep.lambda_max = estimate_lambda_max(op, g, cfg.power_iters, cfg.seed + q);
        rep.epsilon_used =
            cfg.epsilon_absolute ? cfg.epsilon : cfg.epsilon * rep.lambda_max;
        double eps = rep.epsilon_used;

        Eigen::MatrixXd b = op.back_project(data[q]);
        double bnorm = b.norm();
        if (bnorm == 0.0) {
            rep.converged = true;
            res.per_frequency.push_back(rep);
            continue;
        }

        auto apply = [&](const Eigen::MatrixXd& x) -> Eigen::MatrixXd {
            return op.normal(x) + eps * x;
        };

        Eigen::MatrixXd x = Eigen::MatrixXd::Zero(g.n_eta, g.n_eta);
        Eigen::MatrixXd r = b;
        Eigen::MatrixXd p = r;
        double rr = r.squaredNorm();
        int it = 0;
        for (; it < cfg.cg_max_iters; ++it) {
            if (std::sqrt(rr) <= cfg.cg_tol * bnorm) break;
            Eigen::MatrixXd ap = apply(p);
            double pap = (p.array() * ap.array()).sum();
            if (pap <= 0.0) break;  // lost positive-definiteness, bail out
            double a = rr / pap;
            x += a * p;
            r -= a * ap;
            if ((it + 1) % 25 == 0) r = b - apply(x);  // defeat drift
            double rr_new = r.squaredNorm();
            p = r + (rr_new / rr) * p;
            rr = rr_new;
        }
        // True residual for the report.
        double true_res = (b - apply(x)).norm();
        rep.iterations = it;
        rep.relative_residual = true_res / bnorm;
        rep.converged = rep.relative_residual <= cfg.cg_tol * 1.01;
        res.per_frequency.push_back(rep);
        res.converged = res.converged && rep.converged;
        res.eta += x;
    }
    res.eta /= double(omegas.size());
    return res;
}

} // namespace wbe
