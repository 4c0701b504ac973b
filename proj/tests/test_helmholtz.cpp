#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "wbe/born/adjoint.hpp"
#include "wbe/born/forward.hpp"
#include "wbe/helmholtz/dataset.hpp"
#include "wbe/helmholtz/farfield.hpp"
#include "wbe/helmholtz/solver.hpp"
#include "wbe/media/media.hpp"

using namespace wbe;

namespace {

Eigen::MatrixXd gaussian_blob(int n, double cx, double cy, double sigma, double amp) {
    Grids g = make_grids(8, n);
    Eigen::MatrixXd m(n, n);
    for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix) {
            double dx = g.pix(ix) - cx, dy = g.pix(iy) - cy;
            m(iy, ix) = amp * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
        }
    return m;
}

double rel_err(const Eigen::MatrixXcd& got, const Eigen::MatrixXcd& want) {
    return (got - want).norm() / want.norm();
}

} // namespace

TEST(Solver, ZeroMediumGivesZeroScatteredField) {
    Grids g = make_grids(4, 16);
    HelmholtzSolver solver(Eigen::MatrixXd::Zero(16, 16), 2.0 * pi, g, {});
    Field f = solver.solve(0);
    EXPECT_EQ(f.u.norm(), 0.0);
    EXPECT_EQ(f.residual, 0.0);
    FarField ff = far_field(Eigen::MatrixXd::Zero(16, 16), 2.0 * pi, g, {});
    EXPECT_EQ(ff.values.norm(), 0.0);
}

TEST(Solver, ResidualMeetsContract) {
    Grids g = make_grids(4, 16);
    Rng rng(40);
    Eigen::MatrixXd m = gen_random_smooth(16, 6, 2.0, 0.3, rng);
    HelmholtzConfig cfg;
    HelmholtzSolver solver(m, 4.0 * pi, g, cfg);
    for (int s = 0; s < 3; ++s) {
        Field f = solver.solve(s);
        EXPECT_LE(f.residual, cfg.solver_tol);
        EXPECT_TRUE(f.u.allFinite());
        EXPECT_GT(f.u.norm(), 0.0);
        EXPECT_EQ(f.source, s);
        EXPECT_NEAR(f.ppw, 8.0, 1e-12);
    }
}

TEST(Solver, MeshFollowsTheMediumPixels) {
    // At refine=1 the mesh nodes inside the medium square coincide with pixel
    // centers, so the lifted field must reproduce the array exactly.
    Grids g = make_grids(4, 16);
    Rng rng(41);
    Eigen::MatrixXd m = gen_random_smooth(16, 6, 2.0, 0.3, rng);
    HelmholtzConfig cfg;
    HelmholtzSolver solver(m, 2.0 * pi, g, cfg);
    const Eigen::MatrixXd& mesh = solver.mesh_medium();
    int w = cfg.pml_width;
    int off = w + 8;  // first node with x > -1/2
    for (int iy = 0; iy < 16; ++iy)
        for (int ix = 0; ix < 16; ++ix)
            ASSERT_EQ(mesh(off + iy, off + ix), m(iy, ix));
    // Outside the square the contrast vanishes.
    EXPECT_EQ(mesh(w, w), 0.0);
    EXPECT_EQ(mesh.row(0).norm(), 0.0);
}

TEST(Solver, CubicUpsampleReproducesLinearRamps) {
    int n = 16;
    Eigen::MatrixXd m(n, n);
    Grids g = make_grids(4, n);
    for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix) m(iy, ix) = 0.1 * g.pix(ix) + 0.02;
    HelmholtzConfig cfg;
    cfg.refine = 2;
    cfg.cubic_medium = true;
    HelmholtzSolver solver(m, 2.0 * pi, g, cfg);
    const Eigen::MatrixXd& mesh = solver.mesh_medium();
    for (int iy = 0; iy < solver.total(); ++iy)
        for (int ix = 0; ix < solver.total(); ++ix) {
            double x = solver.node(ix), y = solver.node(iy);
            // Stay two pixels clear of the zero extension at the square edge.
            if (std::abs(x) > 0.5 - 2.0 / n || std::abs(y) > 0.5 - 2.0 / n) continue;
            ASSERT_NEAR(mesh(iy, ix), 0.1 * x + 0.02, 1e-12);
        }
}

TEST(Solver, FarFieldIsLinearInSmallContrast) {
    // Doubling a weak point contrast must double the scattered data; the
    // remainder is the genuinely quadratic part of the scattering series.
    Grids g = make_grids(4, 16);
    Eigen::MatrixXd base = Eigen::MatrixXd::Zero(16, 16);
    base(9, 6) = 1.0;
    FarField big = far_field(0.01 * base, 2.0 * pi, g, {});
    FarField small = far_field(0.005 * base, 2.0 * pi, g, {});
    EXPECT_LT((big.values - 2.0 * small.values).norm() / big.values.norm(), 1e-3);
}

TEST(Solver, ValidatesConfiguration) {
    Grids g = make_grids(4, 16);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(16, 16);
    EXPECT_THROW(HelmholtzSolver(m, 0.0, g, {}), config_error);
    EXPECT_THROW(HelmholtzSolver(Eigen::MatrixXd::Zero(8, 8), 2.0 * pi, g, {}), config_error);
    HelmholtzConfig thin;
    thin.pml_width = 4;
    EXPECT_THROW(HelmholtzSolver(m, 2.0 * pi, g, thin), config_error);
    HelmholtzConfig tight;
    tight.box = 0.8;  // receivers at R = 0.9 would sit in the collar
    EXPECT_THROW(HelmholtzSolver(m, 2.0 * pi, g, tight), config_error);
    HelmholtzConfig ragged;
    ragged.box = 0.95;  // 30.4 cells across: not a mesh-aligned half-width
    EXPECT_THROW(HelmholtzSolver(m, 2.0 * pi, g, ragged), config_error);
    HelmholtzConfig none;
    none.refine = 0;
    EXPECT_THROW(HelmholtzSolver(m, 2.0 * pi, g, none), config_error);
}

TEST(Solver, FlagsCoarseResolution) {
    Grids g = make_grids(4, 16);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(16, 16);
    // 10 pi over spacing 1/16 is 3.2 points per wavelength: too coarse.
    HelmholtzSolver coarse(m, 10.0 * pi, g, {});
    Field f = coarse.solve(0);
    EXPECT_NEAR(f.ppw, 3.2, 1e-12);
    EXPECT_TRUE(f.low_resolution);
    HelmholtzSolver fine(m, 2.0 * pi, g, {});
    EXPECT_FALSE(fine.solve(0).low_resolution);
}

TEST(FarField, RotatingTheMediumShiftsBothAngleAxes) {
    // A quarter turn of the scatterer relabels sources and receivers together.
    Grids g = make_grids(8, 16);
    Rng rng(42);
    Eigen::MatrixXd m = gen_random_smooth(16, 8, 2.0, 0.25, rng);
    double omega = 2.0 * pi;
    FarField plain = far_field(m, omega, g, {});
    FarField turned = far_field(rotate_medium(m, 1), omega, g, {});
    Eigen::MatrixXcd want = shift_data(plain.values, -g.n_sc / 4);
    EXPECT_LT(rel_err(turned.values, want), 1e-6);
}

TEST(FarField, WeakScattererMatchesSingleScatteringPrediction) {
    Grids g = make_grids(32, 32);
    Eigen::MatrixXd m = gaussian_blob(32, 0.08, -0.05, 0.1, 0.01);
    double omega = 2.0 * pi * 1.5;
    HelmholtzConfig cfg;
    cfg.refine = 2;
    FarField ff = normalize(far_field(m, omega, g, cfg));
    Eigen::MatrixXcd predicted = apply_F(m, omega, g);
    EXPECT_LT(rel_err(ff.values, predicted), 0.15);
}

TEST(FarField, NormalizationConstant) {
    double omega = 20.0 * pi, R = 0.9;
    cplx_t c = far_field_constant(omega, R);
    EXPECT_NEAR(std::abs(c), omega * omega / std::sqrt(8.0 * pi * omega * R), 1e-10);
    double want_arg = std::remainder(pi / 4 + omega * R, 2.0 * pi);
    EXPECT_NEAR(std::remainder(std::arg(c) - want_arg, 2.0 * pi), 0.0, 1e-10);

    FarField raw;
    raw.values = Eigen::MatrixXcd::Constant(2, 2, c);
    raw.omega = omega;
    raw.R = R;
    FarField unit = normalize(raw);
    EXPECT_TRUE(unit.normalized);
    EXPECT_NEAR(std::abs(unit.values(0, 0) - cplx_t(1.0, 0.0)), 0.0, 1e-12);
    EXPECT_THROW(normalize(unit), config_error);
}

TEST(Dataset, RoundTripsThroughDirectory) {
    namespace fsys = std::filesystem;
    std::string dir = (fsys::temp_directory_path() / "wbe_dataset_test").string();
    fsys::remove_all(dir);

    Grids g = make_grids(8, 16);
    Rng rng(43);
    std::vector<Eigen::MatrixXd> media;
    media.push_back(gen_random_smooth(16, 6, 2.0, 0.2, rng));
    media.push_back(gen_random_smooth(16, 6, 2.0, 0.2, rng));
    media.push_back(media[0]);  // duplicate: its data must come back identical
    FrequencySet fs = make_frequency_set({1.0, 2.5});
    HelmholtzConfig cfg;
    simulate_dataset(media, fs, g, cfg, dir, 77, "random-smooth");

    EXPECT_TRUE(fsys::exists(fsys::path(dir) / "media.wbt"));
    EXPECT_TRUE(fsys::exists(fsys::path(dir) / "lambda_f1.wbt"));
    EXPECT_TRUE(fsys::exists(fsys::path(dir) / "lambda_f2.5.wbt"));
    EXPECT_TRUE(fsys::exists(fsys::path(dir) / "meta.json"));

    WideBandDataset ds = read_dataset(dir);
    EXPECT_EQ(ds.n_sc, 8);
    EXPECT_EQ(ds.n_eta, 16);
    EXPECT_EQ(ds.count(), 3u);
    EXPECT_EQ(ds.freqs, fs.freqs);
    EXPECT_EQ(ds.R, g.R);
    EXPECT_EQ(ds.seed, 77u);
    EXPECT_EQ(ds.family, "random-smooth");
    ASSERT_EQ(ds.lambda.size(), 2u);

    for (std::uint64_t k = 0; k < 3; ++k)
        EXPECT_EQ((ds.media.slice_matrix(k) - media[k]).norm(), 0.0);
    Eigen::MatrixXcd direct = normalize(far_field(media[0], 2.0 * pi, g, cfg)).values;
    EXPECT_EQ((ds.lambda[0].slice_cmatrix(0) - direct).norm(), 0.0);
    EXPECT_EQ((ds.lambda[0].slice_cmatrix(2) - ds.lambda[0].slice_cmatrix(0)).norm(), 0.0);
    EXPECT_GT((ds.lambda[0].slice_cmatrix(1) - ds.lambda[0].slice_cmatrix(0)).norm(), 0.0);
    EXPECT_GT((ds.lambda[1].slice_cmatrix(0) - ds.lambda[0].slice_cmatrix(0)).norm(), 0.0);

    EXPECT_THROW(simulate_dataset({}, fs, g, cfg, dir), config_error);
    EXPECT_THROW(read_dataset(dir + "-missing"), io_error);
    fsys::remove_all(dir);
}
