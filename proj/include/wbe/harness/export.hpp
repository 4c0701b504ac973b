#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "wbe/core/types.hpp"

namespace wbe {

// 8-bit binary PGM with min-max scaling. The affine map is not invertible from
// the pixels alone, so the scale goes to a JSON sidecar next to the image.
// A constant field has no range; it renders mid-gray.
inline void write_pgm(const std::string& path, const Eigen::MatrixXd& m) {
    if (m.rows() < 1 || m.cols() < 1) throw config_error("image export needs a non-empty matrix");
    if (!m.allFinite()) throw numeric_error("image export: matrix has non-finite entries");
    double lo = m.minCoeff();
    double hi = m.maxCoeff();
    double span = hi - lo;

    std::ofstream f(path, std::ios::binary);
    if (!f) throw io_error("cannot open " + path + " for writing");
    f << "P5\n" << m.cols() << " " << m.rows() << "\n255\n";
    std::vector<unsigned char> row(static_cast<size_t>(m.cols()));
    for (int iy = 0; iy < m.rows(); ++iy) {
        for (int ix = 0; ix < m.cols(); ++ix) {
            double v = span > 0.0 ? (m(iy, ix) - lo) / span * 255.0 : 128.0;
            row[static_cast<size_t>(ix)] = static_cast<unsigned char>(std::lround(v));
        }
        f.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
    if (!f) throw io_error("failed writing " + path);
    f.close();

    nlohmann::json side;
    side["min"] = lo;
    side["max"] = hi;
    side["rows"] = m.rows();
    side["cols"] = m.cols();
    std::ofstream s(path + ".json");
    if (!s) throw io_error("cannot open " + path + ".json for writing");
    s << side.dump(2) << "\n";
}

inline void write_csv_matrix(const std::string& path, const Eigen::MatrixXd& m) {
    std::ofstream f(path);
    if (!f) throw io_error("cannot open " + path + " for writing");
    for (int c = 0; c < m.cols(); ++c) f << (c ? ",c" : "c") << c;
    f << "\n";
    char buf[64];
    for (int iy = 0; iy < m.rows(); ++iy) {
        for (int ix = 0; ix < m.cols(); ++ix) {
            std::snprintf(buf, sizeof buf, "%.17g", m(iy, ix));
            f << (ix ? "," : "") << buf;
        }
        f << "\n";
    }
    if (!f) throw io_error("failed writing " + path);
}

inline Eigen::MatrixXd read_csv_matrix(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw io_error("cannot open " + path);
    std::string line;
    if (!std::getline(f, line)) throw format_error(path + ": empty csv");
    std::vector<std::vector<double>> rows;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw format_error(path + ": bad numeric cell \"" + cell + "\"");
            }
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw format_error(path + ": ragged rows");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw format_error(path + ": no data rows");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(rows.front().size()));
    for (size_t iy = 0; iy < rows.size(); ++iy)
        for (size_t ix = 0; ix < rows.front().size(); ++ix)
            m(static_cast<Eigen::Index>(iy), static_cast<Eigen::Index>(ix)) = rows[iy][ix];
    return m;
}

}  // namespace wbe
