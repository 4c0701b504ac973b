#pragma once

#include <cmath>
#include <vector>

#include "wbe/core/types.hpp"

namespace wbe {

// Shared discretization for one experiment size.
//
// Angles (sources, receivers and the rotation grid all coincide):
//   s_j = r_j = theta_j = 2*pi*j / n_sc,    j = 0..n_sc-1
// Radial grid for polar back-projections:
//   rho_i = i / (2*n_rho)  in [0, 1/2),     i = 0..n_rho-1
// Medium pixels are cell centers of [-1/2,1/2]^2 at spacing 1/n_eta.
struct Grids {
    int n_sc = 0;     // sources = receivers = polar angles
    int n_eta = 0;    // medium pixels per axis
    int n_rho = 0;    // radial samples
    double R = 0.9;   // receiver circle radius

    int n_theta() const { return n_sc; }

    double angle(int j) const { return 2.0 * pi * j / n_sc; }
    double rho(int i) const { return double(i) / (2.0 * n_rho); }
    double h() const { return 1.0 / n_eta; }

    // Pixel-center coordinate along one axis.
    double pix(int i) const { return -0.5 + (i + 0.5) / double(n_eta); }
};

inline Grids make_grids(int n_sc, int n_eta, int n_rho = 0, double R = 0.9) {
    if (n_rho <= 0) n_rho = n_sc;
    if (n_sc < 4) throw config_error("n_sc must be at least 4");
    if (n_eta < 4) throw config_error("n_eta must be at least 4");
    if (n_rho < 2) throw config_error("n_rho must be at least 2");
    if (!(R > 0.5)) throw config_error("receiver radius must exceed the medium half-width 0.5");
    Grids g;
    g.n_sc = n_sc;
    g.n_eta = n_eta;
    g.n_rho = n_rho;
    g.R = R;
    return g;
}

// Strictly increasing band of probing frequencies in Hz; omega = 2*pi*f.
struct FrequencySet {
    std::vector<double> freqs;

    std::size_t size() const { return freqs.size(); }
    double omega(std::size_t k) const { return 2.0 * pi * freqs[k]; }
};

inline FrequencySet make_frequency_set(std::vector<double> freqs) {
    if (freqs.empty()) throw config_error("frequency set must be non-empty");
    for (std::size_t k = 0; k < freqs.size(); ++k) {
        if (freqs[k] <= 0.0) throw config_error("frequencies must be positive");
        if (k > 0 && freqs[k] <= freqs[k - 1])
            throw config_error("frequencies must be strictly increasing");
    }
    return FrequencySet{std::move(freqs)};
}

// Dyadic band ending at f_top: f_top/2^(count-1), ..., f_top/2, f_top.
inline FrequencySet dyadic_frequencies(double f_top, int count) {
    if (count < 1) throw config_error("frequency count must be positive");
    std::vector<double> f(count);
    for (int k = 0; k < count; ++k) f[count - 1 - k] = f_top / double(1 << k);
    return make_frequency_set(std::move(f));
}

} // namespace wbe
