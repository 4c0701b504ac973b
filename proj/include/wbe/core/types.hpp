#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace wbe {

using real_t = double;
using cplx_t = std::complex<double>;

inline constexpr double pi = 3.14159265358979323846;

// Error taxonomy: configuration problems, numerical breakdowns and file
// problems surface as distinct types so the CLI can map them to exit codes.
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Tensor file carries a wrong magic or malformed header.
struct format_error : io_error {
    using io_error::io_error;
};

// A dimension field exceeds the supported per-axis limit.
struct dim_error : io_error {
    using io_error::io_error;
};

} // namespace wbe
