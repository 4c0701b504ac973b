#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "wbe/harness/commands.hpp"

using namespace wbe;
using namespace wbe::harness;
using wbe::cfg::json;
namespace fsys = std::filesystem;

namespace {

std::string fresh_dir(const std::string& name) {
    fsys::path p = fsys::temp_directory_path() / "wbe_harness" / name;
    fsys::remove_all(p);
    fsys::create_directories(p);
    return p.string();
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    EXPECT_TRUE(bool(f)) << path;
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// Small end-to-end dataset shared by several tests: cheap single-frequency
// scattering off 8x8 media.
json tiny_gen_config(int n, const std::string& family = "smooth") {
    json j;
    j["family"] = family;
    j["n"] = n;
    j["n_sc"] = 8;
    j["n_eta"] = 8;
    j["freqs"] = {0.25, 0.5};
    j["seed"] = 11;
    j["solver"] = {{"refine", 1}};
    return j;
}

json tiny_train_config(const std::string& dataset, int epochs) {
    json j;
    j["dataset"] = dataset;
    j["model"] = "uncompressed";
    j["init"] = "glorot";
    j["lr"] = 1e-3;
    j["batch"] = 2;
    j["epochs"] = epochs;
    j["seed"] = 7;
    j["split"] = {{"train", 0.5}, {"val", 0.5}};
    j["conv"] = {{"kernel", 3}, {"hidden", {4}}};
    return j;
}

}  // namespace

TEST(HarnessConfig, RejectsUnknownKeysEverywhere) {
    json ok = {{"a", 1}, {"b", 2}};
    EXPECT_NO_THROW(cfg::allow_keys(ok, "t", {"a", "b", "c"}));
    EXPECT_THROW(cfg::allow_keys(ok, "t", {"a"}), config_error);
    EXPECT_THROW(cfg::allow_keys(json::array(), "t", {"a"}), config_error);

    json g = tiny_gen_config(1);
    g["familly"] = "smooth";
    EXPECT_THROW(cmd_gen(g, fresh_dir("cfg0")), config_error);

    g = tiny_gen_config(1);
    g["solver"]["refinement"] = 2;
    EXPECT_THROW(cmd_gen(g, fresh_dir("cfg1")), config_error);

    g = tiny_gen_config(1);
    g["n"] = "four";
    EXPECT_THROW(cmd_gen(g, fresh_dir("cfg2")), config_error);

    g = tiny_gen_config(1);
    g.erase("n");
    EXPECT_THROW(cmd_gen(g, fresh_dir("cfg3")), config_error);
}

TEST(HarnessConfig, FamilyNamesParse) {
    EXPECT_EQ(parse_family("smooth").kind, "smooth");
    EXPECT_EQ(parse_family("shepp").kind, "shepp");
    FamilySpec t = parse_family("tri5");
    EXPECT_EQ(t.kind, "tri");
    EXPECT_DOUBLE_EQ(t.side_px, 5.0);
    EXPECT_DOUBLE_EQ(parse_family("tri12.5").side_px, 12.5);
    EXPECT_THROW(parse_family("tri"), config_error);
    EXPECT_THROW(parse_family("tri1"), config_error);
    EXPECT_THROW(parse_family("tri5x"), config_error);
    EXPECT_THROW(parse_family("blob"), config_error);
}

TEST(Export, PgmHeaderBytesAndSidecar) {
    std::string dir = fresh_dir("pgm");
    Eigen::MatrixXd m(80, 80);
    for (int iy = 0; iy < 80; ++iy)
        for (int ix = 0; ix < 80; ++ix) m(iy, ix) = iy + 0.01 * ix;
    std::string path = dir + "/field.pgm";
    write_pgm(path, m);

    std::string bytes = slurp(path);
    std::stringstream hdr(bytes.substr(0, 64));
    std::string magic;
    int w = 0, h = 0, maxv = 0;
    hdr >> magic >> w >> h >> maxv;
    EXPECT_EQ(magic, "P5");
    EXPECT_EQ(w, 80);
    EXPECT_EQ(h, 80);
    EXPECT_EQ(maxv, 255);
    EXPECT_EQ(bytes.size(), bytes.find("255\n") + 4 + 80 * 80);

    json side;
    std::ifstream(path + ".json") >> side;
    EXPECT_DOUBLE_EQ(side.at("min").get<double>(), m.minCoeff());
    EXPECT_DOUBLE_EQ(side.at("max").get<double>(), m.maxCoeff());

    // min maps to 0, max to 255
    std::string body = bytes.substr(bytes.find("255\n") + 4);
    EXPECT_EQ(static_cast<unsigned char>(body.front()), 0);
    EXPECT_EQ(static_cast<unsigned char>(body.back()), 255);
}

TEST(Export, ConstantFieldRendersMidGray) {
    std::string dir = fresh_dir("pgm_const");
    Eigen::MatrixXd m = Eigen::MatrixXd::Constant(5, 7, 3.25);
    std::string path = dir + "/flat.pgm";
    write_pgm(path, m);
    std::string bytes = slurp(path);
    std::string body = bytes.substr(bytes.find("255\n") + 4);
    ASSERT_EQ(body.size(), 35u);
    for (char c : body) EXPECT_EQ(static_cast<unsigned char>(c), 128);
    json side;
    std::ifstream(path + ".json") >> side;
    EXPECT_DOUBLE_EQ(side.at("min").get<double>(), side.at("max").get<double>());
}

TEST(Export, CsvRoundTripsExactly) {
    std::string dir = fresh_dir("csv");
    Rng rng(4);
    Eigen::MatrixXd m(7, 5);
    for (int iy = 0; iy < 7; ++iy)
        for (int ix = 0; ix < 5; ++ix) m(iy, ix) = rng.uniform(-3.0, 3.0);
    write_csv_matrix(dir + "/m.csv", m);

    std::ifstream f(dir + "/m.csv");
    std::string header;
    std::getline(f, header);
    EXPECT_EQ(header, "c0,c1,c2,c3,c4");

    Eigen::MatrixXd back = read_csv_matrix(dir + "/m.csv");
    ASSERT_EQ(back.rows(), 7);
    ASSERT_EQ(back.cols(), 5);
    EXPECT_LE((back - m).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Export, CommandHandlesSlicesAndRejectsBadInput) {
    std::string dir = fresh_dir("export_cmd");
    Tensor stack = Tensor::zeros(Dtype::f64, {3, 4, 4});
    Eigen::MatrixXd s1 = Eigen::MatrixXd::Random(4, 4);
    stack.set_slice(1, s1);
    write_tensor(dir + "/stack.wbt", stack);

    json j;
    j["input"] = dir + "/stack.wbt";
    j["format"] = "csv";
    j["slice"] = 1;
    cmd_export(j, dir);
    Eigen::MatrixXd back = read_csv_matrix(dir + "/stack.csv");
    EXPECT_LE((back - s1).cwiseAbs().maxCoeff(), 1e-12);

    j["slice"] = 3;
    EXPECT_THROW(cmd_export(j, dir), config_error);

    json jc;
    Tensor ct = Tensor::from_matrix(Eigen::MatrixXcd::Random(3, 3).eval());
    write_tensor(dir + "/c.wbt", ct);
    jc["input"] = dir + "/c.wbt";
    EXPECT_THROW(cmd_export(jc, dir), config_error);

    json jv;
    write_tensor(dir + "/v.wbt", Tensor::from_vector({1.0, 2.0}));
    jv["input"] = dir + "/v.wbt";
    EXPECT_THROW(cmd_export(jv, dir), config_error);

    json jf;
    jf["input"] = dir + "/stack.wbt";
    jf["format"] = "bmp";
    EXPECT_THROW(cmd_export(jf, dir), config_error);
}

TEST(Gen, WritesShapesAndMeta) {
    std::string dir = fresh_dir("gen_shapes");
    cmd_gen(tiny_gen_config(2), dir);

    Tensor media = read_tensor(dir + "/media.wbt");
    ASSERT_EQ(media.ndim(), 3u);
    EXPECT_EQ(media.dims()[0], 2u);
    EXPECT_EQ(media.dims()[1], 8u);
    EXPECT_EQ(media.dims()[2], 8u);

    for (const char* f : {"lambda_f0.25.wbt", "lambda_f0.5.wbt"}) {
        Tensor lam = read_tensor(dir + "/" + std::string(f));
        EXPECT_EQ(lam.dtype(), Dtype::c128);
        ASSERT_EQ(lam.ndim(), 3u);
        EXPECT_EQ(lam.dims()[0], 2u);
        EXPECT_EQ(lam.dims()[1], 8u);
        EXPECT_EQ(lam.dims()[2], 8u);
    }

    WideBandDataset ds = read_dataset(dir);
    EXPECT_EQ(ds.count(), 2u);
    EXPECT_EQ(ds.seed, 11u);
    EXPECT_EQ(ds.family, "smooth");

    // distinct samples come from distinct child streams
    EXPECT_GT((ds.media.slice_matrix(0) - ds.media.slice_matrix(1)).norm(), 1e-6);
}

TEST(Gen, RerunsAreByteIdentical) {
    std::string d1 = fresh_dir("gen_a");
    std::string d2 = fresh_dir("gen_b");
    cmd_gen(tiny_gen_config(2), d1);
    cmd_gen(tiny_gen_config(2), d2);
    for (const char* f : {"media.wbt", "lambda_f0.25.wbt", "lambda_f0.5.wbt"})
        EXPECT_EQ(slurp(d1 + "/" + std::string(f)), slurp(d2 + "/" + std::string(f))) << f;

    json other = tiny_gen_config(2);
    other["seed"] = 12;
    std::string d3 = fresh_dir("gen_c");
    cmd_gen(other, d3);
    EXPECT_NE(slurp(d1 + "/media.wbt"), slurp(d3 + "/media.wbt"));
}

TEST(Gen, TriangleFamilyCoversBoundedArea) {
    std::string dir = fresh_dir("gen_tri");
    json j;
    j["family"] = "tri5";
    j["n"] = 3;
    j["n_sc"] = 4;
    j["n_eta"] = 80;
    j["freqs"] = {0.5};
    j["seed"] = 5;
    j["tri"] = {{"count", 3}, {"contrast", 0.2}};
    j["solver"] = {{"refine", 1}};
    cmd_gen(j, dir);

    Tensor media = read_tensor(dir + "/media.wbt");
    double bound = 3 * 1.5 * std::sqrt(3.0) / 4.0 * 25.0;
    for (std::size_t k = 0; k < 3; ++k) {
        Eigen::MatrixXd m = media.slice_matrix(k);
        int nz = int((m.array() != 0.0).count());
        EXPECT_GT(nz, 0) << "sample " << k;
        EXPECT_LE(nz, bound) << "sample " << k;
    }
}

TEST(Fbp, ReconstructsAndReportsPerSample) {
    std::string ddir = fresh_dir("fbp_data");
    cmd_gen(tiny_gen_config(2), ddir);

    std::string rdir = fresh_dir("fbp_out");
    json j;
    j["dataset"] = ddir;
    j["epsilon"] = 0.05;
    j["images"] = true;
    cmd_fbp(j, rdir);

    Tensor recon = read_tensor(rdir + "/recon.wbt");
    ASSERT_EQ(recon.ndim(), 3u);
    EXPECT_EQ(recon.dims()[0], 2u);
    EXPECT_EQ(recon.dims()[1], 8u);
    EXPECT_EQ(recon.dims()[2], 8u);
    EXPECT_GT(recon.slice_matrix(0).norm(), 0.0);

    std::ifstream csv(rdir + "/fbp.csv");
    std::string line;
    std::getline(csv, line);
    EXPECT_EQ(line, "sample,rel_rmse,converged");
    int rows = 0;
    while (std::getline(csv, line)) {
        if (line.empty()) continue;
        ++rows;
        std::stringstream ss(line);
        std::string sample, rel, conv;
        std::getline(ss, sample, ',');
        std::getline(ss, rel, ',');
        std::getline(ss, conv, ',');
        double r = std::stod(rel);
        EXPECT_TRUE(std::isfinite(r));
        EXPECT_LT(r, 2.0);
        EXPECT_TRUE(conv == "0" || conv == "1");
    }
    EXPECT_EQ(rows, 2);
    EXPECT_TRUE(fsys::exists(rdir + "/recon_0.pgm"));
    EXPECT_TRUE(fsys::exists(rdir + "/recon_0.pgm.json"));
    EXPECT_TRUE(fsys::exists(rdir + "/recon_1.pgm"));
}

TEST(Fbp, ZeroDataIsFlaggedAndExcluded) {
    std::string ddir = fresh_dir("fbp_zero");
    cmd_gen(tiny_gen_config(2), ddir);
    for (const char* f : {"lambda_f0.25.wbt", "lambda_f0.5.wbt"}) {
        Tensor lam = read_tensor(ddir + "/" + std::string(f));
        Tensor z = Tensor::zeros(Dtype::c128, lam.dims());
        write_tensor(ddir + "/" + std::string(f), z);
    }

    std::string rdir = fresh_dir("fbp_zero_out");
    json j;
    j["dataset"] = ddir;
    cmd_fbp(j, rdir);

    Tensor recon = read_tensor(rdir + "/recon.wbt");
    EXPECT_EQ(recon.slice_matrix(0).norm(), 0.0);
    EXPECT_EQ(recon.slice_matrix(1).norm(), 0.0);

    std::ifstream csv(rdir + "/fbp.csv");
    std::string line;
    std::getline(csv, line);
    while (std::getline(csv, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string sample, rel;
        std::getline(ss, sample, ',');
        std::getline(ss, rel, ',');
        EXPECT_TRUE(std::isnan(std::stod(rel))) << line;
    }
}

TEST(Train, ZeroEpochsCheckpointEqualsInit) {
    std::string ddir = fresh_dir("train_data");
    cmd_gen(tiny_gen_config(4), ddir);

    std::string tdir = fresh_dir("train_zero");
    cmd_train(tiny_train_config(ddir, 0), tdir);

    std::ifstream hist(tdir + "/history.csv");
    std::string line;
    std::getline(hist, line);
    EXPECT_EQ(line, "epoch,train_mse,val_rel_rmse,lr");
    EXPECT_FALSE(std::getline(hist, line));

    UncompressedModel restored = restore_uncompressed(tdir + "/checkpoint");
    WideBandDataset ds = read_dataset(ddir);
    Grids g = make_grids(ds.n_sc, ds.n_eta, 0, ds.R);
    Rng rng(7);
    UncompressedModel fresh(g, ds.freqs, InitKind::glorot, rng, 3, {4});
    ASSERT_EQ(restored.params().t.size(), fresh.params().t.size());
    for (std::size_t i = 0; i < fresh.params().t.size(); ++i) {
        EXPECT_EQ(restored.params().t[i].name, fresh.params().t[i].name);
        EXPECT_EQ((restored.params().t[i].v - fresh.params().t[i].v).cwiseAbs().maxCoeff(), 0.0)
            << fresh.params().t[i].name;
    }
}

TEST(RotateTest, ZeroTurnsMatchesPlainValidation) {
    std::string ddir = fresh_dir("rot_data");
    cmd_gen(tiny_gen_config(4), ddir);
    std::string tdir = fresh_dir("rot_train");
    cmd_train(tiny_train_config(ddir, 2), tdir);

    std::string rdir = fresh_dir("rot_out");
    json j;
    j["dataset"] = ddir;
    j["checkpoint"] = tdir + "/checkpoint";
    j["quarter_turns"] = {0, 4, 1};
    j["split"] = {{"train", 0.5}, {"val", 0.5}};
    cmd_rotate_test(j, rdir);

    Eigen::MatrixXd rows = read_csv_matrix(rdir + "/rotate.csv");
    ASSERT_EQ(rows.rows(), 3);
    ASSERT_EQ(rows.cols(), 2);
    EXPECT_EQ(rows(0, 0), 0.0);
    EXPECT_EQ(rows(1, 0), 4.0);

    // four quarter turns are the identity, so the metric reproduces q=0 exactly
    EXPECT_EQ(rows(0, 1), rows(1, 1));

    // the 0-degree row is plain validation of the stored model
    WideBandDataset ds = read_dataset(ddir);
    UncompressedModel m = restore_uncompressed(tdir + "/checkpoint");
    std::vector<std::size_t> fi = freq_indices(ds, ds.freqs);
    std::vector<TrainSample> val = gather_samples(ds, fi, 2, 4);
    EXPECT_EQ(rows(0, 1), eval_rel_rmse(m, val));

    // a genuine rotation changes the metric of a non-equivariant trained conv
    EXPECT_NE(rows(0, 1), rows(2, 1));
}

TEST(Sweep, GridHasOneCellPerCombination) {
    std::string ddir = fresh_dir("sweep_data");
    cmd_gen(tiny_gen_config(4), ddir);

    std::string sdir = fresh_dir("sweep_out");
    json j;
    j["dataset"] = ddir;
    j["sizes"] = {1, 2};
    j["freq_sets"] = {{0.5}, {0.25, 0.5}};
    j["model"] = "uncompressed";
    j["lr"] = 1e-3;
    j["batch"] = 2;
    j["epochs"] = 1;
    j["seed"] = 3;
    j["split"] = {{"train", 0.5}, {"val", 0.5}};
    j["conv"] = {{"kernel", 3}, {"hidden", {4}}};
    cmd_sweep(j, sdir);

    std::ifstream csv(sdir + "/sweep.csv");
    std::string header;
    std::getline(csv, header);
    EXPECT_EQ(header, "size,0.5,0.25+0.5");

    Eigen::MatrixXd cells = read_csv_matrix(sdir + "/sweep.csv");
    ASSERT_EQ(cells.rows(), 2);
    ASSERT_EQ(cells.cols(), 3);
    EXPECT_EQ(cells(0, 0), 1.0);
    EXPECT_EQ(cells(1, 0), 2.0);
    for (int iy = 0; iy < 2; ++iy)
        for (int ix = 1; ix < 3; ++ix) EXPECT_TRUE(std::isfinite(cells(iy, ix)));
}

TEST(Sweep, OversizedCellIsRecordedAsMissing) {
    std::string ddir = fresh_dir("sweep_skip_data");
    cmd_gen(tiny_gen_config(4), ddir);

    std::string sdir = fresh_dir("sweep_skip_out");
    json j;
    j["dataset"] = ddir;
    j["sizes"] = {2, 50};
    j["freq_sets"] = {{0.5}};
    j["model"] = "uncompressed";
    j["epochs"] = 1;
    j["batch"] = 2;
    j["split"] = {{"train", 0.5}, {"val", 0.5}};
    j["conv"] = {{"kernel", 3}, {"hidden", {4}}};
    cmd_sweep(j, sdir);

    Eigen::MatrixXd cells = read_csv_matrix(sdir + "/sweep.csv");
    ASSERT_EQ(cells.rows(), 2);
    EXPECT_TRUE(std::isfinite(cells(0, 1)));
    EXPECT_TRUE(std::isnan(cells(1, 1)));
}

#ifdef WBE_BIN

namespace {
int run_cli(const std::string& args) {
    std::string cmd = std::string(WBE_BIN) + " " + args + " >/dev/null 2>&1";
    int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}
}  // namespace

TEST(Cli, ExitCodesFollowTheContract) {
    std::string dir = fresh_dir("cli");

    Tensor t = Tensor::from_matrix(Eigen::MatrixXd::Random(4, 4).eval());
    write_tensor(dir + "/m.wbt", t);

    json ok;
    ok["input"] = dir + "/m.wbt";
    ok["format"] = "csv";
    std::ofstream(dir + "/ok.json") << ok.dump();
    EXPECT_EQ(run_cli("export --config " + dir + "/ok.json --out " + dir), 0);
    EXPECT_TRUE(fsys::exists(dir + "/m.csv"));

    json badkey = ok;
    badkey["formatt"] = "csv";
    std::ofstream(dir + "/badkey.json") << badkey.dump();
    EXPECT_EQ(run_cli("export --config " + dir + "/badkey.json --out " + dir), 1);

    json missing;
    missing["input"] = dir + "/absent.wbt";
    std::ofstream(dir + "/missing.json") << missing.dump();
    EXPECT_EQ(run_cli("export --config " + dir + "/missing.json --out " + dir), 3);

    Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(3, 3);
    bad(1, 1) = std::numeric_limits<double>::quiet_NaN();
    write_tensor(dir + "/nan.wbt", Tensor::from_matrix(bad));
    json nanj;
    nanj["input"] = dir + "/nan.wbt";
    nanj["format"] = "pgm";
    std::ofstream(dir + "/nan.json") << nanj.dump();
    EXPECT_EQ(run_cli("export --config " + dir + "/nan.json --out " + dir), 2);

    // missing config file never reaches the command
    EXPECT_NE(run_cli("export --config " + dir + "/nowhere.json"), 0);

    std::ofstream(dir + "/notjson.json") << "{broken";
    EXPECT_EQ(run_cli("export --config " + dir + "/notjson.json --out " + dir), 1);
}

TEST(Cli, SeedEnvBeatsConfig) {
    std::string dir = fresh_dir("cli_seed");
    json g;
    g["family"] = "smooth";
    g["n"] = 1;
    g["n_sc"] = 4;
    g["n_eta"] = 8;
    g["freqs"] = {0.5};
    g["seed"] = 0;
    g["solver"] = {{"refine", 1}};
    std::ofstream(dir + "/gen.json") << g.dump();

    std::string d0 = dir + "/out0";
    std::string d1 = dir + "/out1";
    EXPECT_EQ(run_cli("gen --config " + dir + "/gen.json --out " + d0), 0);
    int status = std::system(("WBE_SEED=123 " + std::string(WBE_BIN) + " gen --config " + dir +
                              "/gen.json --out " + d1 + " >/dev/null 2>&1")
                                 .c_str());
    EXPECT_EQ(WEXITSTATUS(status), 0);

    WideBandDataset a = read_dataset(d0);
    WideBandDataset b = read_dataset(d1);
    EXPECT_EQ(a.seed, 0u);
    EXPECT_EQ(b.seed, 123u);
    EXPECT_GT((a.media.slice_matrix(0) - b.media.slice_matrix(0)).norm(), 1e-9);
}

#endif  // WBE_BIN
