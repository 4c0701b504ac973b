#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "json.hpp"

#include "wbe/core/tensor_io.hpp"
#include "wbe/model/model.hpp"
#include "wbe/model/optim.hpp"

namespace wbe {

struct TrainConfig {
    double lr = 3e-4;
    int batch = 16;
    int epochs = 100;
    double decay_rate = 0.96;
    int decay_steps = 50;
    std::uint64_t seed = 0;
    std::string init = "glorot";
};

struct TrainSample {
    std::vector<Eigen::MatrixXcd> lambda;
    Eigen::MatrixXd eta;
};

struct EpochRow {
    int epoch = 0;
    double train_mse = 0, val_rel_rmse = 0, lr = 0;
};

struct TrainResult {
    std::vector<EpochRow> history;
};

// Mean over samples of ||pred - truth||_F / ||truth||_F. Samples with a
// zero-norm truth carry no relative scale and are skipped with a warning.
template <class Model>
double eval_rel_rmse(const Model& model, const std::vector<TrainSample>& set) {
    double acc = 0;
    int used = 0;
    for (const TrainSample& s : set) {
        double tn = s.eta.norm();
        if (tn == 0.0) {
            std::cerr << "warning: skipping a zero-norm target in the metric\n";
            continue;
        }
        Tape t;
        ForwardOut fo = model.forward(t, s.lambda, nullptr);
        acc += (t.value(fo.pred) - s.eta).norm() / tn;
        ++used;
    }
    if (used == 0) {
        std::cerr << "warning: every target had zero norm; metric undefined\n";
        return std::numeric_limits<double>::quiet_NaN();
    }
    return acc / used;
}

inline void write_history_csv(const std::filesystem::path& path,
                              const std::vector<EpochRow>& rows) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write " + path.string());
    out << "epoch,train_mse,val_rel_rmse,lr\n";
    out.precision(17);
    for (const EpochRow& r : rows)
        out << r.epoch << "," << r.train_mse << "," << r.val_rel_rmse << "," << r.lr << "\n";
}

inline void save_params(const ParamSet& ps, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw io_error("cannot create " + dir.string());
    for (const auto& p : ps.t)
        write_tensor((dir / (p.name + ".wbt")).string(), Tensor::from_matrix(p.v));
}

inline void load_params(ParamSet& ps, const std::filesystem::path& dir) {
    for (auto& p : ps.t) {
        Tensor t = read_tensor((dir / (p.name + ".wbt")).string());
        Eigen::MatrixXd m = t.to_matrix();
        if (m.rows() != p.v.rows() || m.cols() != p.v.cols())
            throw format_error("stored shape of " + p.name + " does not match the model");
        p.v = m;
    }
}

namespace detail {

inline nlohmann::json model_manifest(const UncompressedModel& m) {
    return {{"kind", "uncompressed"},
            {"n_sc", m.grids().n_sc},
            {"n_eta", m.grids().n_eta},
            {"n_rho", m.grids().n_rho},
            {"radius", m.grids().R},
            {"freqs", m.freqs()},
            {"conv_k", m.tail().kernel()},
            {"conv_chain", m.tail().chain()}};
}

inline nlohmann::json model_manifest(const CompressedModel& m) {
    nlohmann::json j = {{"kind", "compressed"},
                        {"n_sc", m.grids().n_sc},
                        {"n_eta", m.grids().n_eta},
                        {"n_rho", m.grids().n_rho},
                        {"radius", m.grids().R},
                        {"freqs", m.freqs()},
                        {"conv_k", m.tail().kernel()},
                        {"conv_chain", m.tail().chain()}};
    j["levels"] = m.levels();
    j["rank"] = m.rank();
    j["resnet_depth"] = m.resnet_depth();
    return j;
}

inline std::vector<int> hidden_of(const std::vector<int>& chain) {
    // chain is input, hidden..., 1
    if (chain.size() < 2) throw format_error("conv chain too short");
    return std::vector<int>(chain.begin() + 1, chain.end() - 1);
}

} // namespace detail

template <class Model>
void save_checkpoint(const Model& m, const TrainConfig& cfg, int epoch,
                     const std::filesystem::path& dir) {
    save_params(m.params(), dir);
    nlohmann::json j = detail::model_manifest(m);
    j["epoch"] = epoch;
    j["seed"] = cfg.seed;
    j["init"] = cfg.init;
    j["lr"] = cfg.lr;
    j["batch"] = cfg.batch;
    j["decay_rate"] = cfg.decay_rate;
    j["decay_steps"] = cfg.decay_steps;
    std::ofstream out(dir / "manifest.json");
    if (!out) throw io_error("cannot write " + (dir / "manifest.json").string());
    out << j.dump(2) << "\n";
}

inline nlohmann::json read_manifest(const std::filesystem::path& dir) {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw io_error("cannot open " + (dir / "manifest.json").string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw format_error(std::string("bad manifest: ") + e.what());
    }
    return j;
}

inline UncompressedModel restore_uncompressed(const std::filesystem::path& dir) {
    nlohmann::json j = read_manifest(dir);
    if (j.at("kind") != "uncompressed") throw format_error("checkpoint is not an uncompressed model");
    Grids g = make_grids(j.at("n_sc"), j.at("n_eta"), j.at("n_rho"), j.at("radius"));
    Rng rng(0);
    UncompressedModel m(g, j.at("freqs").get<std::vector<double>>(), InitKind::glorot, rng,
                        j.at("conv_k"), detail::hidden_of(j.at("conv_chain")));
    load_params(m.params(), dir);
    return m;
}

inline CompressedModel restore_compressed(const std::filesystem::path& dir) {
    nlohmann::json j = read_manifest(dir);
    if (j.at("kind") != "compressed") throw format_error("checkpoint is not a compressed model");
    Grids g = make_grids(j.at("n_sc"), j.at("n_eta"), j.at("n_rho"), j.at("radius"));
    Rng rng(0);
    CompressedModel m(g, j.at("freqs").get<std::vector<double>>(), j.at("levels"), j.at("rank"),
                      j.at("resnet_depth"), InitKind::glorot, rng, j.at("conv_k"),
                      detail::hidden_of(j.at("conv_chain")));
    load_params(m.params(), dir);
    return m;
}

// Minibatch training. Shuffling is a per-epoch Fisher-Yates pass driven by a
// child stream of cfg.seed, so runs with equal seeds are bit-identical.
template <class Model>
TrainResult train(Model& model, const std::vector<TrainSample>& train_set,
                  const std::vector<TrainSample>& val_set, const TrainConfig& cfg,
                  const std::filesystem::path& history_csv = {},
                  const std::filesystem::path& checkpoint_dir = {}) {
    if (train_set.empty()) throw config_error("training set is empty");
    if (cfg.batch < 1) throw config_error("batch size must be at least 1");
    if (cfg.epochs < 0) throw config_error("epoch count must be nonnegative");
    Adam opt(model.params(), cfg.lr, cfg.decay_rate, cfg.decay_steps);
    Rng root(cfg.seed);
    TrainResult res;
    std::vector<std::size_t> order(train_set.size());
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), 0);
        Rng shuffle = root.fork(std::uint64_t(epoch));
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffle.uniform_index(i)]);
        double loss_sum = 0;
        for (std::size_t at = 0; at < order.size(); at += std::size_t(cfg.batch)) {
            std::size_t bs = std::min(std::size_t(cfg.batch), order.size() - at);
            std::vector<Eigen::MatrixXd> acc;
            for (std::size_t b = 0; b < bs; ++b) {
                const TrainSample& s = train_set[order[at + b]];
                Tape t;
                ForwardOut fo = model.forward(t, s.lambda, &s.eta);
                double loss = t.value(fo.loss)(0, 0);
                if (!std::isfinite(loss))
                    throw numeric_error("training diverged: loss is not finite at epoch " +
                                        std::to_string(epoch + 1) + ", step " +
                                        std::to_string(opt.step_count() + 1));
                loss_sum += loss;
                t.backward(fo.loss);
                std::vector<Eigen::MatrixXd> g = collect_grads(t, fo, model.params());
                if (acc.empty())
                    acc = std::move(g);
                else
                    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += g[i];
            }
            for (auto& g : acc) g /= double(bs);
            opt.step(model.params(), acc);
        }
        EpochRow row;
        row.epoch = epoch + 1;
        row.train_mse = loss_sum / double(train_set.size());
        row.val_rel_rmse = val_set.empty() ? 0.0 : eval_rel_rmse(model, val_set);
        row.lr = opt.rate_for(opt.step_count());
        res.history.push_back(row);
        if (!history_csv.empty()) write_history_csv(history_csv, res.history);
    }
    if (!checkpoint_dir.empty()) save_checkpoint(model, cfg, cfg.epochs, checkpoint_dir);
    return res;
}

} // namespace wbe
