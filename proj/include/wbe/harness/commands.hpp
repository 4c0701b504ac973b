#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "wbe/born/adjoint.hpp"
#include "wbe/born/fbp.hpp"
#include "wbe/core/tensor_io.hpp"
#include "wbe/harness/config.hpp"
#include "wbe/harness/export.hpp"
#include "wbe/helmholtz/dataset.hpp"
#include "wbe/media/media.hpp"
#include "wbe/model/train.hpp"

namespace wbe::harness {

namespace fsys = std::filesystem;
using cfg::json;

// ---- shared pieces ----

struct FamilySpec {
    std::string kind;     // smooth | tri | shepp
    double side_px = 0;  // tri only, parsed from the family name
};

inline FamilySpec parse_family(const std::string& fam) {
    if (fam == "smooth") return {"smooth", 0};
    if (fam == "shepp") return {"shepp", 0};
    if (fam.rfind("tri", 0) == 0 && fam.size() > 3) {
        std::size_t used = 0;
        double side = 0;
        try {
            side = std::stod(fam.substr(3), &used);
        } catch (const std::exception&) {
            throw config_error("unknown medium family \"" + fam + "\"");
        }
        if (used != fam.size() - 3 || side < 2.0)
            throw config_error("triangle family needs a side of at least 2 pixels: \"" + fam + "\"");
        return {"tri", side};
    }
    throw config_error("unknown medium family \"" + fam + "\" (want smooth, shepp, or tri<side>)");
}

inline HelmholtzConfig solver_from(const json& j, const std::string& ctx) {
    cfg::allow_keys(j, ctx,
                    {"box", "refine", "pml_width", "pml_order", "pml_intensity", "tol",
                     "cubic_medium", "min_ppw"});
    HelmholtzConfig hc;
    hc.box = cfg::get_num(j, ctx, "box", hc.box);
    hc.refine = cfg::get_int(j, ctx, "refine", hc.refine);
    hc.pml_width = cfg::get_int(j, ctx, "pml_width", hc.pml_width);
    hc.pml_order = cfg::get_int(j, ctx, "pml_order", hc.pml_order);
    hc.pml_intensity = cfg::get_num(j, ctx, "pml_intensity", hc.pml_intensity);
    hc.solver_tol = cfg::get_num(j, ctx, "tol", hc.solver_tol);
    hc.cubic_medium = cfg::get_bool(j, ctx, "cubic_medium", hc.cubic_medium);
    hc.min_ppw = cfg::get_num(j, ctx, "min_ppw", hc.min_ppw);
    return hc;
}

// Map requested frequency values onto dataset columns. An empty request means
// every stored frequency.
inline std::vector<std::size_t> freq_indices(const WideBandDataset& ds,
                                             const std::vector<double>& wanted) {
    std::vector<std::size_t> idx;
    if (wanted.empty()) {
        for (std::size_t i = 0; i < ds.freqs.size(); ++i) idx.push_back(i);
        return idx;
    }
    for (double w : wanted) {
        bool found = false;
        for (std::size_t i = 0; i < ds.freqs.size(); ++i)
            if (std::abs(ds.freqs[i] - w) <= 1e-9 * std::max(1.0, std::abs(w))) {
                idx.push_back(i);
                found = true;
                break;
            }
        if (!found)
            throw config_error("frequency " + format_freq(w) + " is not in the dataset");
    }
    return idx;
}

inline std::vector<TrainSample> gather_samples(const WideBandDataset& ds,
                                               const std::vector<std::size_t>& fi,
                                               std::size_t begin, std::size_t end) {
    std::vector<TrainSample> out;
    for (std::size_t k = begin; k < end; ++k) {
        TrainSample s;
        s.eta = ds.media.slice_matrix(k);
        for (std::size_t q : fi) s.lambda.push_back(ds.lambda[q].slice_cmatrix(k));
        out.push_back(std::move(s));
    }
    return out;
}

struct SplitCounts {
    std::size_t n_train = 0;
    std::size_t n_val = 0;
};

inline SplitCounts split_counts(std::size_t n, const json& j, const std::string& ctx) {
    json sj = cfg::get_obj(j, ctx, "split");
    cfg::allow_keys(sj, ctx + ".split", {"train", "val"});
    double ft = cfg::get_num(sj, ctx + ".split", "train", 0.75);
    double fv = cfg::get_num(sj, ctx + ".split", "val", 0.25);
    if (!(ft > 0) || !(fv > 0) || ft + fv > 1.0 + 1e-12)
        throw config_error(ctx + ".split: fractions must be positive and sum to at most 1");
    SplitCounts sc;
    sc.n_train = std::size_t(ft * double(n));
    sc.n_val = std::size_t(fv * double(n));
    if (sc.n_train < 1) throw config_error(ctx + ".split: training slice is empty");
    if (sc.n_val < 1) throw config_error(ctx + ".split: validation slice is empty");
    return sc;
}

inline TrainConfig train_cfg_from(const json& j, const std::string& ctx) {
    TrainConfig tc;
    tc.lr = cfg::get_num(j, ctx, "lr", tc.lr);
    tc.batch = cfg::get_int(j, ctx, "batch", tc.batch);
    tc.epochs = cfg::get_int(j, ctx, "epochs", tc.epochs);
    tc.decay_rate = cfg::get_num(j, ctx, "decay_rate", tc.decay_rate);
    tc.decay_steps = cfg::get_int(j, ctx, "decay_steps", tc.decay_steps);
    tc.seed = cfg::get_u64(j, ctx, "seed", tc.seed);
    tc.init = cfg::get_str(j, ctx, "init", tc.init);
    return tc;
}

struct ModelSettings {
    std::string kind = "uncompressed";
    std::string init = "glorot";
    int conv_k = 5;
    std::vector<int> conv_hidden = {8, 8};
    int levels = 0;
    int rank = 0;
    int resnet_depth = 2;
};

inline ModelSettings model_settings_from(const json& j, const std::string& ctx) {
    ModelSettings ms;
    ms.kind = cfg::get_str(j, ctx, "model", ms.kind);
    if (ms.kind != "uncompressed" && ms.kind != "compressed")
        throw config_error(ctx + ".model: want \"uncompressed\" or \"compressed\"");
    ms.init = cfg::get_str(j, ctx, "init", ms.init);
    json cj = cfg::get_obj(j, ctx, "conv");
    cfg::allow_keys(cj, ctx + ".conv", {"kernel", "hidden"});
    ms.conv_k = cfg::get_int(cj, ctx + ".conv", "kernel", ms.conv_k);
    ms.conv_hidden = cfg::get_int_list(cj, ctx + ".conv", "hidden", ms.conv_hidden);
    if (ms.kind == "compressed") {
        json bj = cfg::require(j, ctx, "compressed");
        cfg::allow_keys(bj, ctx + ".compressed", {"levels", "rank", "resnet_depth"});
        ms.levels = cfg::get_int(bj, ctx + ".compressed", "levels");
        ms.rank = cfg::get_int(bj, ctx + ".compressed", "rank");
        ms.resnet_depth = cfg::get_int(bj, ctx + ".compressed", "resnet_depth", ms.resnet_depth);
    }
    return ms;
}

// Both architectures share no base class; dispatch through a generic callable.
template <class Fn>
auto with_model(const ModelSettings& ms, const Grids& g, const std::vector<double>& freqs,
                std::uint64_t seed, Fn&& fn) {
    Rng rng(seed);
    if (ms.kind == "uncompressed") {
        UncompressedModel m(g, freqs, parse_init(ms.init), rng, ms.conv_k, ms.conv_hidden);
        return fn(m);
    }
    CompressedModel m(g, freqs, ms.levels, ms.rank, ms.resnet_depth, parse_init(ms.init), rng,
                      ms.conv_k, ms.conv_hidden);
    return fn(m);
}

// ---- gen ----

inline void cmd_gen(const json& j, const std::string& out) {
    cfg::allow_keys(j, "gen",
                    {"family", "n", "n_sc", "n_eta", "n_rho", "freqs", "seed", "radius", "solver",
                     "smooth", "tri", "shepp", "out"});
    std::string family = cfg::get_str(j, "gen", "family", "smooth");
    FamilySpec fam = parse_family(family);
    int n = cfg::get_int(j, "gen", "n");
    if (n < 1) throw config_error("gen.n: need at least one sample");
    Grids g = make_grids(cfg::get_int(j, "gen", "n_sc"), cfg::get_int(j, "gen", "n_eta"),
                         cfg::get_int(j, "gen", "n_rho", 0), cfg::get_num(j, "gen", "radius", 0.9));
    FrequencySet fs = make_frequency_set(cfg::get_num_list(j, "gen", "freqs"));
    std::uint64_t seed = cfg::get_u64(j, "gen", "seed", 0);
    HelmholtzConfig hc = solver_from(cfg::get_obj(j, "gen", "solver"), "gen.solver");

    json smoothj = cfg::get_obj(j, "gen", "smooth");
    cfg::allow_keys(smoothj, "gen.smooth", {"points", "sigma_px", "amp"});
    json trij = cfg::get_obj(j, "gen", "tri");
    cfg::allow_keys(trij, "gen.tri", {"count", "contrast"});
    json sheppj = cfg::get_obj(j, "gen", "shepp");
    cfg::allow_keys(sheppj, "gen.shepp", {"contrast"});

    std::vector<Eigen::MatrixXd> media;
    Rng root(seed);
    for (int k = 0; k < n; ++k) {
        Rng rk = root.fork(std::uint64_t(k));
        if (fam.kind == "smooth") {
            media.push_back(gen_random_smooth(g.n_eta, cfg::get_int(smoothj, "gen.smooth", "points", 6),
                                              cfg::get_num(smoothj, "gen.smooth", "sigma_px", 2.0),
                                              cfg::get_num(smoothj, "gen.smooth", "amp", 0.2), rk));
        } else if (fam.kind == "tri") {
            media.push_back(gen_triangles(g.n_eta, cfg::get_int(trij, "gen.tri", "count", 3),
                                          fam.side_px,
                                          cfg::get_num(trij, "gen.tri", "contrast", 0.2), rk));
        } else {
            media.push_back(gen_shepp_logan(g.n_eta, cfg::get_num(sheppj, "gen.shepp", "contrast", 0.1)));
        }
    }
    simulate_dataset(media, fs, g, hc, out, seed, family);
    std::cout << "gen: wrote " << n << " samples, " << fs.size() << " frequencies to " << out
              << "\n";
}

// ---- fbp ----

inline void cmd_fbp(const json& j, const std::string& out) {
    cfg::allow_keys(j, "fbp",
                    {"dataset", "freqs", "epsilon", "epsilon_absolute", "cg_tol", "cg_max_iters",
                     "power_iters", "seed", "n_rho", "images", "out"});
    WideBandDataset ds = read_dataset(cfg::get_str(j, "fbp", "dataset"));
    std::vector<double> wanted;
    if (j.contains("freqs")) wanted = cfg::get_num_list(j, "fbp", "freqs");
    std::vector<std::size_t> fi = freq_indices(ds, wanted);
    Grids g = make_grids(ds.n_sc, ds.n_eta, cfg::get_int(j, "fbp", "n_rho", 0), ds.R);

    FbpConfig fc;
    fc.epsilon = cfg::get_num(j, "fbp", "epsilon", fc.epsilon);
    fc.epsilon_absolute = cfg::get_bool(j, "fbp", "epsilon_absolute", fc.epsilon_absolute);
    fc.cg_tol = cfg::get_num(j, "fbp", "cg_tol", fc.cg_tol);
    fc.cg_max_iters = cfg::get_int(j, "fbp", "cg_max_iters", fc.cg_max_iters);
    fc.power_iters = cfg::get_int(j, "fbp", "power_iters", fc.power_iters);
    fc.seed = cfg::get_u64(j, "fbp", "seed", fc.seed);
    bool images = cfg::get_bool(j, "fbp", "images", false);

    std::vector<double> omegas;
    for (std::size_t q : fi) omegas.push_back(2.0 * pi * ds.freqs[q]);

    std::size_t n = ds.count();
    Tensor recon = Tensor::zeros(Dtype::f64,
                                 {std::uint64_t(n), std::uint64_t(ds.n_eta), std::uint64_t(ds.n_eta)});
    std::ofstream csv(fsys::path(out) / "fbp.csv");
    if (!csv) throw io_error("cannot write " + (fsys::path(out) / "fbp.csv").string());
    csv << "sample,rel_rmse,converged\n";
    csv.precision(17);

    double acc = 0;
    std::size_t used = 0;
    for (std::size_t k = 0; k < n; ++k) {
        std::vector<Eigen::MatrixXcd> data;
        double dn = 0;
        for (std::size_t q : fi) {
            data.push_back(ds.lambda[q].slice_cmatrix(k));
            dn += data.back().norm();
        }
        double rel = std::numeric_limits<double>::quiet_NaN();
        bool conv = true;
        if (dn == 0.0) {
            std::cerr << "warning: sample " << k
                      << " has zero-norm far-field data; reconstruction is zero and the sample"
                         " is left out of the summary\n";
        } else {
            FbpResult r = fbp_reconstruct(data, omegas, fc, g);
            recon.set_slice(k, r.eta);
            conv = r.converged;
            Eigen::MatrixXd truth = ds.media.slice_matrix(k);
            double tn = truth.norm();
            if (tn == 0.0) {
                std::cerr << "warning: sample " << k
                          << " has a zero-norm medium; left out of the summary\n";
            } else {
                rel = (r.eta - truth).norm() / tn;
                acc += rel;
                ++used;
            }
        }
        csv << k << "," << rel << "," << (conv ? 1 : 0) << "\n";
        if (images) {
            write_pgm((fsys::path(out) / ("recon_" + std::to_string(k) + ".pgm")).string(),
                      recon.slice_matrix(k));
        }
    }
    write_tensor((fsys::path(out) / "recon.wbt").string(), recon);
    if (used > 0)
        std::cout << "fbp: mean rel_rmse over " << used << " samples = " << acc / double(used)
                  << "\n";
    else
        std::cout << "fbp: no samples entered the summary\n";
}

// ---- train ----

inline void cmd_train(const json& j, const std::string& out) {
    cfg::allow_keys(j, "train",
                    {"dataset", "freqs", "model", "init", "lr", "batch", "epochs", "decay_rate",
                     "decay_steps", "seed", "split", "n_rho", "compressed", "conv", "out"});
    WideBandDataset ds = read_dataset(cfg::get_str(j, "train", "dataset"));
    std::vector<double> wanted;
    if (j.contains("freqs")) wanted = cfg::get_num_list(j, "train", "freqs");
    std::vector<std::size_t> fi = freq_indices(ds, wanted);
    std::vector<double> freqs_used;
    for (std::size_t q : fi) freqs_used.push_back(ds.freqs[q]);

    Grids g = make_grids(ds.n_sc, ds.n_eta, cfg::get_int(j, "train", "n_rho", 0), ds.R);
    SplitCounts sc = split_counts(ds.count(), j, "train");
    std::vector<TrainSample> tr = gather_samples(ds, fi, 0, sc.n_train);
    std::vector<TrainSample> va = gather_samples(ds, fi, sc.n_train, sc.n_train + sc.n_val);

    ModelSettings ms = model_settings_from(j, "train");
    TrainConfig tc = train_cfg_from(j, "train");
    ms.init = tc.init;

    double final_val = with_model(ms, g, freqs_used, tc.seed, [&](auto& m) {
        TrainResult r = train(m, tr, va, tc, fsys::path(out) / "history.csv",
                              fsys::path(out) / "checkpoint");
        if (r.history.empty()) {
            write_history_csv(fsys::path(out) / "history.csv", {});
            return eval_rel_rmse(m, va);
        }
        return r.history.back().val_rel_rmse;
    });
    std::cout << "train: " << ms.kind << " model, " << tc.epochs
              << " epochs, final val rel_rmse = " << final_val << "\n";
}

// ---- rotate-test ----

inline void cmd_rotate_test(const json& j, const std::string& out) {
    cfg::allow_keys(j, "rotate-test",
                    {"dataset", "checkpoint", "quarter_turns", "split", "resimulate", "solver",
                     "retrain", "train", "out"});
    WideBandDataset ds = read_dataset(cfg::get_str(j, "rotate-test", "dataset"));
    std::string ck = cfg::get_str(j, "rotate-test", "checkpoint", "");
    bool retrain = cfg::get_bool(j, "rotate-test", "retrain", false);
    if (ck.empty() && !retrain)
        throw config_error("rotate-test: needs a checkpoint unless retrain is on");
    std::vector<int> turns = cfg::get_int_list(j, "rotate-test", "quarter_turns", {0, 1, 2, 3});
    if (turns.empty()) throw config_error("rotate-test.quarter_turns: empty list");
    bool resim = cfg::get_bool(j, "rotate-test", "resimulate", false);
    HelmholtzConfig hc = solver_from(cfg::get_obj(j, "rotate-test", "solver"), "rotate-test.solver");

    SplitCounts sp = split_counts(ds.count(), j, "rotate-test");

    // The model decides which frequencies it consumes.
    std::vector<double> model_freqs;
    ModelSettings ms;
    TrainConfig tc;
    if (retrain) {
        json tj = cfg::require(j, "rotate-test", "train");
        cfg::allow_keys(tj, "rotate-test.train",
                        {"freqs", "model", "init", "lr", "batch", "epochs", "decay_rate",
                         "decay_steps", "seed", "compressed", "conv"});
        ms = model_settings_from(tj, "rotate-test.train");
        tc = train_cfg_from(tj, "rotate-test.train");
        ms.init = tc.init;
        model_freqs = tj.contains("freqs")
                          ? cfg::get_num_list(tj, "rotate-test.train", "freqs")
                          : ds.freqs;
    } else {
        model_freqs = read_manifest(ck).at("freqs").get<std::vector<double>>();
    }
    std::vector<std::size_t> fi = freq_indices(ds, model_freqs);

    auto rotated_slice = [&](std::size_t begin, std::size_t end, int q) {
        int qm = ((q % 4) + 4) % 4;
        std::vector<TrainSample> set;
        for (std::size_t k = begin; k < end; ++k) {
            TrainSample s;
            s.eta = rotate_medium(ds.media.slice_matrix(k), qm);
            if (resim && qm != 0) {
                Grids gsim = make_grids(ds.n_sc, ds.n_eta, 0, ds.R);
                for (std::size_t q2 : fi) {
                    FarField ff = far_field(s.eta, 2.0 * pi * ds.freqs[q2], gsim, hc);
                    s.lambda.push_back(normalize(ff).values);
                }
            } else {
                for (std::size_t q2 : fi)
                    s.lambda.push_back(shift_data(ds.lambda[q2].slice_cmatrix(k), -qm * ds.n_sc / 4));
            }
            set.push_back(std::move(s));
        }
        return set;
    };

    std::ofstream csv(fsys::path(out) / "rotate.csv");
    if (!csv) throw io_error("cannot write " + (fsys::path(out) / "rotate.csv").string());
    csv << "quarter_turns,rel_rmse\n";
    csv.precision(17);

    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (int q : turns) {
        std::vector<TrainSample> val = rotated_slice(sp.n_train, sp.n_train + sp.n_val, q);
        double rel;
        if (retrain) {
            std::vector<double> fr;
            for (std::size_t q2 : fi) fr.push_back(ds.freqs[q2]);
            Grids g = make_grids(ds.n_sc, ds.n_eta, 0, ds.R);
            std::vector<TrainSample> trn = rotated_slice(0, sp.n_train, q);
            rel = with_model(ms, g, fr, tc.seed, [&](auto& m) {
                train(m, trn, val, tc);
                return eval_rel_rmse(m, val);
            });
        } else {
            json man = read_manifest(ck);
            if (man.at("kind") == "uncompressed") {
                UncompressedModel m = restore_uncompressed(ck);
                rel = eval_rel_rmse(m, val);
            } else {
                CompressedModel m = restore_compressed(ck);
                rel = eval_rel_rmse(m, val);
            }
        }
        csv << q << "," << rel << "\n";
        lo = std::min(lo, rel);
        hi = std::max(hi, rel);
        std::cout << "rotate-test: q=" << q << " rel_rmse=" << rel << "\n";
    }
    std::cout << "rotate-test: spread = " << hi - lo << "\n";
}

// ---- sweep ----

inline std::string freq_label(const std::vector<double>& fs) {
    std::string s;
    for (std::size_t i = 0; i < fs.size(); ++i) s += (i ? "+" : "") + format_freq(fs[i]);
    return s;
}

inline void cmd_sweep(const json& j, const std::string& out) {
    cfg::allow_keys(j, "sweep",
                    {"dataset", "sizes", "freq_sets", "model", "init", "lr", "batch", "epochs",
                     "decay_rate", "decay_steps", "seed", "split", "n_rho", "compressed", "conv",
                     "out"});
    WideBandDataset ds = read_dataset(cfg::get_str(j, "sweep", "dataset"));
    std::vector<int> sizes = cfg::get_int_list(j, "sweep", "sizes");
    const json& fsets_j = cfg::require(j, "sweep", "freq_sets");
    if (!fsets_j.is_array() || fsets_j.empty())
        throw config_error("sweep.freq_sets: expected a non-empty array of frequency lists");
    std::vector<std::vector<double>> fsets;
    for (const auto& e : fsets_j) {
        if (!e.is_array() || e.empty())
            throw config_error("sweep.freq_sets: each entry must be a non-empty array");
        std::vector<double> fs;
        for (const auto& v : e) {
            if (!v.is_number()) throw config_error("sweep.freq_sets: entries must be numbers");
            fs.push_back(v.get<double>());
        }
        fsets.push_back(std::move(fs));
    }
    if (sizes.empty()) throw config_error("sweep.sizes: empty list");

    Grids g = make_grids(ds.n_sc, ds.n_eta, cfg::get_int(j, "sweep", "n_rho", 0), ds.R);
    SplitCounts sp = split_counts(ds.count(), j, "sweep");
    ModelSettings ms = model_settings_from(j, "sweep");
    TrainConfig tc = train_cfg_from(j, "sweep");
    ms.init = tc.init;

    Eigen::MatrixXd cells(std::int64_t(sizes.size()), std::int64_t(fsets.size()));
    cells.setConstant(std::numeric_limits<double>::quiet_NaN());

    for (std::size_t ci = 0; ci < fsets.size(); ++ci) {
        for (std::size_t si = 0; si < sizes.size(); ++si) {
            try {
                std::vector<std::size_t> fi = freq_indices(ds, fsets[ci]);
                std::vector<double> fr;
                for (std::size_t q : fi) fr.push_back(ds.freqs[q]);
                std::size_t size = std::size_t(sizes[si]);
                if (sizes[si] < 1 || size > sp.n_train)
                    throw config_error("sweep: size " + std::to_string(sizes[si]) +
                                       " exceeds the training slice");
                std::vector<TrainSample> tr = gather_samples(ds, fi, 0, size);
                std::vector<TrainSample> va =
                    gather_samples(ds, fi, sp.n_train, sp.n_train + sp.n_val);
                cells(std::int64_t(si), std::int64_t(ci)) =
                    with_model(ms, g, fr, tc.seed, [&](auto& m) {
                        train(m, tr, va, tc);
                        return eval_rel_rmse(m, va);
                    });
            } catch (const std::exception& e) {
                std::cerr << "sweep: cell (size " << sizes[si] << ", freqs "
                          << freq_label(fsets[ci]) << ") failed: " << e.what() << "\n";
            }
        }
    }

    fsys::path csvp = fsys::path(out) / "sweep.csv";
    std::ofstream csv(csvp);
    if (!csv) throw io_error("cannot write " + csvp.string());
    csv << "size";
    for (const auto& fs : fsets) csv << "," << freq_label(fs);
    csv << "\n";
    csv.precision(17);
    for (std::size_t si = 0; si < sizes.size(); ++si) {
        csv << sizes[si];
        for (std::size_t ci = 0; ci < fsets.size(); ++ci)
            csv << "," << cells(std::int64_t(si), std::int64_t(ci));
        csv << "\n";
    }
    std::cout << "sweep: wrote " << csvp.string() << "\n";
}

// ---- export ----

inline void cmd_export(const json& j, const std::string& out) {
    cfg::allow_keys(j, "export", {"input", "format", "slice", "name", "out"});
    std::string input = cfg::get_str(j, "export", "input");
    std::string format = cfg::get_str(j, "export", "format", "pgm");
    if (format != "pgm" && format != "csv")
        throw config_error("export.format: want \"pgm\" or \"csv\"");
    Tensor t = read_tensor(input);
    if (t.dtype() != Dtype::f64)
        throw config_error("export: input must be a real-valued tensor");
    Eigen::MatrixXd m;
    if (t.ndim() == 2) {
        m = t.to_matrix();
    } else if (t.ndim() == 3) {
        int slice = cfg::get_int(j, "export", "slice", 0);
        if (slice < 0 || std::uint64_t(slice) >= t.dims()[0])
            throw config_error("export.slice: out of range");
        m = t.slice_matrix(std::size_t(slice));
    } else {
        throw config_error("export: input must be a 2-d tensor or a 3-d stack");
    }
    std::string base = cfg::get_str(j, "export", "name", fsys::path(input).stem().string());
    fsys::path target = fsys::path(out) / (base + "." + format);
    if (format == "pgm")
        write_pgm(target.string(), m);
    else
        write_csv_matrix(target.string(), m);
    std::cout << "export: wrote " << target.string() << "\n";
}

}  // namespace wbe::harness
