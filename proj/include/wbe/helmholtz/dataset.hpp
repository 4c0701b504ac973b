#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "wbe/core/tensor.hpp"
#include "wbe/core/tensor_io.hpp"
#include "wbe/helmholtz/farfield.hpp"

namespace wbe {

inline std::string format_freq(double f) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", f);
    return buf;
}

struct WideBandDataset {
    int n_sc = 0;
    int n_eta = 0;
    std::vector<double> freqs;
    double R = 0.0;
    std::uint64_t seed = 0;
    std::string family;
    Tensor media;                // [N, n_eta, n_eta] real
    std::vector<Tensor> lambda;  // per frequency, [N, n_sc, n_sc] complex, normalized
    std::size_t count() const { return media.ndim() == 3 ? media.dims()[0] : 0; }
};

// One normalized far field per (medium, frequency), written as a directory of
// block-stacked tensors plus a JSON description. Sample order follows the
// input list; any solver failure aborts with the failing sample named.
inline void simulate_dataset(const std::vector<Eigen::MatrixXd>& media, const FrequencySet& fs,
                             const Grids& g, const HelmholtzConfig& cfg, const std::string& dir,
                             std::uint64_t seed = 0, const std::string& family = "") {
    namespace fsys = std::filesystem;
    if (media.empty()) throw config_error("dataset: no media given");
    for (const auto& m : media)
        if (m.rows() != g.n_eta || m.cols() != g.n_eta)
            throw config_error("dataset: media must share the grid side");
    std::error_code ec;
    fsys::create_directories(dir, ec);
    if (ec) throw io_error("dataset: cannot create directory " + dir);

    std::uint64_t nmed = media.size();
    Tensor mstack = Tensor::zeros(Dtype::f64, {nmed, std::uint64_t(g.n_eta), std::uint64_t(g.n_eta)});
    for (std::uint64_t k = 0; k < nmed; ++k) mstack.set_slice(k, media[k]);
    write_tensor((fsys::path(dir) / "media.wbt").string(), mstack);

    for (double f : fs.freqs) {
        double omega = 2.0 * pi * f;
        Tensor lstack =
            Tensor::zeros(Dtype::c128, {nmed, std::uint64_t(g.n_sc), std::uint64_t(g.n_sc)});
        for (std::uint64_t k = 0; k < nmed; ++k) {
            try {
                lstack.set_slice(k, normalize(far_field(media[k], omega, g, cfg)).values);
            } catch (const numeric_error& e) {
                throw numeric_error("dataset: medium " + std::to_string(k) + " frequency " +
                                    format_freq(f) + ": " + e.what());
            }
        }
        write_tensor((fsys::path(dir) / ("lambda_f" + format_freq(f) + ".wbt")).string(), lstack);
    }

    nlohmann::json meta;
    meta["n_sc"] = g.n_sc;
    meta["n_eta"] = g.n_eta;
    meta["n_rho"] = g.n_rho;
    meta["freqs"] = fs.freqs;
    meta["R"] = g.R;
    meta["seed"] = seed;
    meta["family"] = family;
    meta["solver"] = {{"refine", cfg.refine},
                      {"pml_width", cfg.pml_width},
                      {"pml_order", cfg.pml_order},
                      {"pml_intensity", cfg.pml_intensity},
                      {"tol", cfg.solver_tol},
                      {"cubic_medium", cfg.cubic_medium}};
    std::ofstream out(fsys::path(dir) / "meta.json");
    if (!out) throw io_error("dataset: cannot write meta.json in " + dir);
    out << meta.dump(2) << "\n";
    if (!out) throw io_error("dataset: short write on meta.json");
}

inline WideBandDataset read_dataset(const std::string& dir) {
    namespace fsys = std::filesystem;
    std::ifstream in(fsys::path(dir) / "meta.json");
    if (!in) throw io_error("dataset: cannot open meta.json in " + dir);
    nlohmann::json meta;
    try {
        in >> meta;
    } catch (const nlohmann::json::exception&) {
        throw format_error("dataset: meta.json is not valid JSON");
    }
    WideBandDataset ds;
    ds.n_sc = meta.at("n_sc").get<int>();
    ds.n_eta = meta.at("n_eta").get<int>();
    ds.freqs = meta.at("freqs").get<std::vector<double>>();
    ds.R = meta.at("R").get<double>();
    ds.seed = meta.value("seed", std::uint64_t(0));
    ds.family = meta.value("family", std::string());
    ds.media = read_tensor((fsys::path(dir) / "media.wbt").string());
    if (ds.media.ndim() != 3 || ds.media.dtype() != Dtype::f64)
        throw format_error("dataset: media.wbt is not a real block stack");
    for (double f : ds.freqs) {
        Tensor t = read_tensor((fsys::path(dir) / ("lambda_f" + format_freq(f) + ".wbt")).string());
        if (t.ndim() != 3 || t.dtype() != Dtype::c128 || t.dims()[0] != ds.media.dims()[0])
            throw format_error("dataset: far-field stack shape disagrees with media");
        ds.lambda.push_back(std::move(t));
    }
    return ds;
}

} // namespace wbe
