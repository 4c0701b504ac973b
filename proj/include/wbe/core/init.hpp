#pragma once

#include <cmath>
#include <vector>

#include "wbe/core/rng.hpp"
#include "wbe/core/types.hpp"

namespace wbe {

// Glorot/Xavier uniform draw: [-b, b] with b = sqrt(6 / (fan_in + fan_out)).
inline double glorot_limit(int fan_in, int fan_out) {
    if (fan_in <= 0 || fan_out <= 0) throw config_error("glorot fans must be positive");
    return std::sqrt(6.0 / double(fan_in + fan_out));
}

inline void glorot_uniform(Rng& rng, int fan_in, int fan_out, std::vector<double>& out) {
    double b = glorot_limit(fan_in, fan_out);
    for (auto& v : out) v = rng.uniform(-b, b);
}

template <typename Matrix>
inline void glorot_uniform_matrix(Rng& rng, int fan_in, int fan_out, Matrix& m) {
    double b = glorot_limit(fan_in, fan_out);
    for (std::ptrdiff_t j = 0; j < m.cols(); ++j)
        for (std::ptrdiff_t i = 0; i < m.rows(); ++i) m(i, j) = rng.uniform(-b, b);
}

} // namespace wbe
