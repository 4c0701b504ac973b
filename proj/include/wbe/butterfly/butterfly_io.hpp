#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "wbe/butterfly/butterfly.hpp"
#include "wbe/core/tensor.hpp"
#include "wbe/core/tensor_io.hpp"

namespace wbe {

namespace detail {

inline Tensor stack_blocks(const std::vector<Eigen::MatrixXcd>& blocks) {
    std::uint64_t n = blocks.size();
    std::uint64_t r = blocks.empty() ? 0 : std::uint64_t(blocks[0].rows());
    std::uint64_t c = blocks.empty() ? 0 : std::uint64_t(blocks[0].cols());
    Tensor t = Tensor::zeros(Dtype::c128, {n, r, c});
    for (std::uint64_t k = 0; k < n; ++k) t.set_slice(k, blocks[k]);
    return t;
}

inline std::vector<Eigen::MatrixXcd> unstack_blocks(const Tensor& t) {
    if (t.ndim() != 3 || t.dtype() != Dtype::c128)
        throw format_error("factor file is not a complex block stack");
    std::vector<Eigen::MatrixXcd> blocks(t.dims()[0]);
    for (std::uint64_t k = 0; k < t.dims()[0]; ++k) blocks[k] = t.slice_cmatrix(k);
    return blocks;
}

} // namespace detail

// One tensor file per factor plus a JSON index. The directory is created if
// absent; existing files are overwritten.
inline void save_butterfly(const ButterflyFactors& f, const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw io_error("cannot create factor directory: " + dir);

    nlohmann::json idx;
    idx["format"] = "butterfly-factors";
    idx["version"] = 1;
    idx["L"] = f.L;
    idx["rank"] = f.rank;
    idx["leaf_rows"] = f.leaf_rows;
    idx["leaf_cols"] = f.leaf_cols;
    idx["n_rows"] = f.n_rows;
    idx["n_cols"] = f.n_cols;

    write_tensor((fs::path(dir) / "u_leaf.wbt").string(), detail::stack_blocks(f.u_leaf));
    write_tensor((fs::path(dir) / "v_leaf.wbt").string(), detail::stack_blocks(f.v_leaf));
    write_tensor((fs::path(dir) / "switch.wbt").string(), detail::stack_blocks(f.m));
    std::vector<std::string> gfiles, hfiles;
    for (std::size_t t = 0; t < f.g.size(); ++t) {
        int level = f.L / 2 + int(t);
        std::string gname = "g_level" + std::to_string(level) + ".wbt";
        std::string hname = "h_level" + std::to_string(level) + ".wbt";
        write_tensor((fs::path(dir) / gname).string(), detail::stack_blocks(f.g[t]));
        write_tensor((fs::path(dir) / hname).string(), detail::stack_blocks(f.h[t]));
        gfiles.push_back(gname);
        hfiles.push_back(hname);
    }
    idx["g_files"] = gfiles;
    idx["h_files"] = hfiles;

    std::ofstream out(fs::path(dir) / "index.json");
    if (!out) throw io_error("cannot write factor index in " + dir);
    out << idx.dump(2) << "\n";
    if (!out) throw io_error("short write on factor index in " + dir);
}

inline ButterflyFactors load_butterfly(const std::string& dir) {
    namespace fs = std::filesystem;
    std::ifstream in(fs::path(dir) / "index.json");
    if (!in) throw io_error("cannot open factor index in " + dir);
    nlohmann::json idx;
    try {
        in >> idx;
    } catch (const nlohmann::json::exception&) {
        throw format_error("factor index is not valid JSON");
    }
    if (idx.value("format", "") != "butterfly-factors" || idx.value("version", 0) != 1)
        throw format_error("unrecognized factor index");

    ButterflyFactors f;
    f.L = idx.at("L").get<int>();
    f.rank = idx.at("rank").get<int>();
    f.leaf_rows = idx.at("leaf_rows").get<int>();
    f.leaf_cols = idx.at("leaf_cols").get<int>();
    f.n_rows = idx.at("n_rows").get<int>();
    f.n_cols = idx.at("n_cols").get<int>();

    f.u_leaf = detail::unstack_blocks(read_tensor((fs::path(dir) / "u_leaf.wbt").string()));
    f.v_leaf = detail::unstack_blocks(read_tensor((fs::path(dir) / "v_leaf.wbt").string()));
    f.m = detail::unstack_blocks(read_tensor((fs::path(dir) / "switch.wbt").string()));
    for (const auto& name : idx.at("g_files").get<std::vector<std::string>>())
        f.g.push_back(detail::unstack_blocks(read_tensor((fs::path(dir) / name).string())));
    for (const auto& name : idx.at("h_files").get<std::vector<std::string>>())
        f.h.push_back(detail::unstack_blocks(read_tensor((fs::path(dir) / name).string())));

    std::size_t nb = std::size_t(1) << f.L;
    if (f.u_leaf.size() != nb || f.v_leaf.size() != nb || f.g.size() != std::size_t(f.L / 2) ||
        f.h.size() != std::size_t(f.L / 2))
        throw format_error("factor block counts disagree with the index");
    return f;
}

} // namespace wbe
