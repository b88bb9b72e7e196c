#include <gtest/gtest.h>

#include <cmath>

#include <Eigen/Eigenvalues>

#include "fixtures.hpp"
#include "sld/errors.hpp"
#include "sld/tool_model.hpp"

namespace sld::tool {
namespace {

using test::canonical_mode;
using test::steel;
using test::uniform_rod;

double first_frequency(const ToolGeometry& g, const ToolMaterial& mat, int elements) {
    const auto sys = assemble_system(build_beam_mesh(g, elements), mat);
    return solve_modes(sys, 1).front().natural_frequency;
}

void expect_error(ErrorCode code, const std::function<void()>& fn) {
    try {
        fn();
        FAIL() << "expected error " << to_string(code);
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), code) << e.what();
    }
}

TEST(BeamMesh, UniformRodSubdividesEvenly) {
    const auto mesh = build_beam_mesh(uniform_rod(12.0, 80.0), 4);
    ASSERT_EQ(mesh.nodes.size(), 5u);
    for (int i = 0; i < 5; ++i) EXPECT_NEAR(mesh.nodes[i], 0.020 * i, 1e-15);
    EXPECT_EQ(mesh.clamped_node, 0);
    EXPECT_EQ(mesh.elements.size(), 4u);
}

TEST(BeamMesh, FlutedSegmentUsesEquivalentDiameter) {
    ToolGeometry g;
    g.segments = {{0.040, 0.012, SegmentKind::Shank}, {0.040, 0.012, SegmentKind::Fluted}};
    g.overhang_length = 0.080;
    const auto mesh = build_beam_mesh(g, 2);
    ASSERT_EQ(mesh.nodes.size(), 5u);
    EXPECT_NEAR(mesh.nodes[2], 0.040, 1e-15);
    EXPECT_DOUBLE_EQ(mesh.elements[0].area, circle_area(0.012));
    EXPECT_DOUBLE_EQ(mesh.elements[3].area, circle_area(0.8 * 0.012));
    EXPECT_DOUBLE_EQ(mesh.elements[3].second_moment, circle_second_moment(0.8 * 0.012));
}

TEST(BeamMesh, OnlyOverhangIsMeshed) {
    ToolGeometry g;
    g.segments = {{0.050, 0.016, SegmentKind::Shank}, {0.030, 0.012, SegmentKind::Fluted}};
    g.overhang_length = 0.045;
    const auto mesh = build_beam_mesh(g, 3);
    EXPECT_NEAR(mesh.nodes.back(), 0.045, 1e-15);
    // 15 mm of shank sticks out, then the full fluted length.
    EXPECT_NEAR(mesh.nodes[3], 0.015, 1e-15);
    EXPECT_EQ(mesh.elements.size(), 6u);
    EXPECT_DOUBLE_EQ(mesh.elements[0].area, circle_area(0.016));
}

TEST(BeamMesh, RejectsBadGeometry) {
    ToolGeometry g = uniform_rod(12.0, 90.0);
    g.overhang_length = 0.100;
    expect_error(ErrorCode::InvalidGeometry, [&] { build_beam_mesh(g, 4); });
    g = uniform_rod(12.0, 80.0);
    g.segments[0].outer_diameter = -0.012;
    expect_error(ErrorCode::InvalidGeometry, [&] { build_beam_mesh(g, 4); });
    g = uniform_rod(12.0, 80.0);
    g.segments[0].length = 0.0;
    expect_error(ErrorCode::InvalidGeometry, [&] { build_beam_mesh(g, 4); });
}

TEST(Assembly, SymmetricAndPositiveDefiniteForRandomGeometries) {
    test::Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        ToolGeometry g;
        const int n_seg = 1 + static_cast<int>(rng() % 3);
        for (int s = 0; s < n_seg; ++s)
            g.segments.push_back({test::uniform(rng, 0.005, 0.06), test::uniform(rng, 0.003, 0.03),
                                  rng() % 2 ? SegmentKind::Fluted : SegmentKind::Shank});
        g.overhang_length = g.total_length() * test::uniform(rng, 0.3, 1.0);
        const ToolMaterial mat{test::uniform(rng, 100e9, 650e9), test::uniform(rng, 2000.0, 15000.0), ""};
        const auto sys = assemble_system(build_beam_mesh(g, 1 + static_cast<int>(rng() % 6)), mat);

        EXPECT_LE((sys.mass - sys.mass.transpose()).norm(), 1e-12 * sys.mass.norm());
        EXPECT_LE((sys.stiffness - sys.stiffness.transpose()).norm(), 1e-12 * sys.stiffness.norm());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> em(sys.mass), ek(sys.stiffness);
        EXPECT_GT(em.eigenvalues().minCoeff(), 0.0);
        EXPECT_GT(ek.eigenvalues().minCoeff(), 0.0);
    }
}

TEST(Assembly, LinearInDensityAndModulus) {
    const auto mesh = build_beam_mesh(uniform_rod(10.0, 60.0), 5);
    const auto base = assemble_system(mesh, steel());
    auto heavy = steel();
    heavy.density *= 2.0;
    auto stiff = steel();
    stiff.youngs_modulus *= 2.0;
    const auto a = assemble_system(mesh, heavy);
    const auto b = assemble_system(mesh, stiff);
    EXPECT_LE((a.mass - 2.0 * base.mass).norm(), 1e-14 * base.mass.norm());
    EXPECT_EQ(a.stiffness, base.stiffness);
    EXPECT_LE((b.stiffness - 2.0 * base.stiffness).norm(), 1e-14 * base.stiffness.norm());
    EXPECT_EQ(b.mass, base.mass);
}

TEST(SolveModes, CantileverMatchesAnalyticFirstFrequency) {
    const double analytic = test::cantilever_f1(0.012, 0.080, 210e9, 7800.0);
    const double fem = first_frequency(uniform_rod(12.0, 80.0), steel(), 16);
    EXPECT_NEAR(fem / analytic, 1.0, 0.01);
}

TEST(SolveModes, ConvergesFromAbove) {
    const auto rod = uniform_rod(12.0, 80.0);
    double previous = first_frequency(rod, steel(), 2);
    for (int n : {4, 8, 16}) {
        const double f = first_frequency(rod, steel(), n);
        EXPECT_LE(f, previous) << n << " elements";
        previous = f;
    }
}

TEST(SolveModes, FrequencyScalesWithRootOfModulus) {
    const auto rod = uniform_rod(8.0, 45.0);
    auto stiff = steel();
    stiff.youngs_modulus *= 4.0;
    const auto sys1 = assemble_system(build_beam_mesh(rod, 8), steel());
    const auto sys4 = assemble_system(build_beam_mesh(rod, 8), stiff);
    const auto m1 = solve_modes(sys1, 3);
    const auto m4 = solve_modes(sys4, 3);
    for (std::size_t i = 0; i < m1.size(); ++i)
        EXPECT_NEAR(m4[i].natural_frequency / m1[i].natural_frequency, 2.0, 2e-9);
}

TEST(SolveModes, SingleModeReplicatedToBothDirections) {
    const auto modes = solve_modes(assemble_system(build_beam_mesh(uniform_rod(12.0, 80.0), 8), steel()), 1);
    ASSERT_EQ(modes.size(), 2u);
    EXPECT_EQ(modes[0].direction, Direction::X);
    EXPECT_EQ(modes[1].direction, Direction::Y);
    EXPECT_EQ(modes[0].natural_frequency, modes[1].natural_frequency);
    EXPECT_EQ(modes[0].modal_stiffness, modes[1].modal_stiffness);
    EXPECT_EQ(modes[0].source, ModeSource::Assumed);
    EXPECT_EQ(modes[0].damping_ratio, 0.02);
}

TEST(SolveModes, ModesAscendAndTipStiffnessMatchesStatics) {
    const auto rod = uniform_rod(12.0, 80.0);
    const auto sys = assemble_system(build_beam_mesh(rod, 16), steel());
    const auto modes = solve_modes(sys, 3);
    EXPECT_LT(modes[0].natural_frequency, modes[2].natural_frequency);
    EXPECT_LT(modes[2].natural_frequency, modes[4].natural_frequency);
    // The first mode carries most of the static tip flexibility 3EI/L^3.
    const double k_static = 3.0 * 210e9 * circle_second_moment(0.012) / std::pow(0.080, 3);
    EXPECT_GT(modes[0].modal_stiffness, k_static);
    EXPECT_LT(modes[0].modal_stiffness, 1.1 * k_static);
}

TEST(SynthesizeFrf, StaticResonanceAndRolloff) {
    const ModeSet one{canonical_mode(Direction::X), canonical_mode(Direction::Y)};
    const std::vector<double> grid{0.0, 800.0, 8000.0};
    const FRF frf = synthesize_frf(one, grid);
    EXPECT_NEAR(frf.g_xx[0].real(), 5.0e-8, 1e-20);
    EXPECT_EQ(frf.g_xx[0].imag(), 0.0);
    EXPECT_NEAR(std::abs(frf.g_xx[1]), 1.25e-6, 1e-18);
    EXPECT_NEAR(frf.g_xx[1].real(), 0.0, 1e-20);
    EXPECT_LT(frf.g_xx[1].imag(), 0.0);
    EXPECT_LT(std::abs(frf.g_xx[2]), 1e-8);
    EXPECT_EQ(frf.provenance, FrfProvenance::Synthesized);
}

TEST(SynthesizeFrf, SymmetryAndNegativeImaginaryPart) {
    test::Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        ModeSet modes;
        const int n = 1 + static_cast<int>(rng() % 4);
        for (int i = 0; i < n; ++i) {
            Mode m;
            m.natural_frequency = test::uniform(rng, 100.0, 5000.0);
            m.damping_ratio = test::uniform(rng, 0.001, 0.2);
            m.modal_stiffness = test::uniform(rng, 1e6, 1e8);
            m.direction = Direction::X;
            modes.push_back(m);
            m.direction = Direction::Y;
            modes.push_back(m);
        }
        const auto grid = stability::linspace(1.0, 8000.0, 500);
        const FRF frf = synthesize_frf(modes, grid);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            EXPECT_EQ(frf.g_xx[i], frf.g_yy[i]);
            EXPECT_LT(frf.g_xx[i].imag(), 0.0);
        }
    }
}

TEST(SynthesizeFrf, RejectsEmptyModes) {
    const std::vector<double> grid{1.0, 2.0};
    expect_error(ErrorCode::InvalidInput, [&] { synthesize_frf(ModeSet{}, grid); });
}

TEST(FrfInterpolation, LinearBetweenSamplesAndBoundedOutside) {
    FRF frf;
    frf.frequencies = {100.0, 200.0};
    frf.g_xx = {{1.0, -1.0}, {3.0, -3.0}};
    frf.g_yy = {{0.0, 0.0}, {2.0, 0.0}};
    const auto [gx, gy] = frf.at(150.0);
    EXPECT_EQ(gx, std::complex<double>(2.0, -2.0));
    EXPECT_EQ(gy, std::complex<double>(1.0, 0.0));
    expect_error(ErrorCode::OutOfRange, [&] { frf.at(250.0); });
}

TEST(ImportModalTable, ReadsRowsAsEma) {
    const auto modes = import_modal_table(R"({"modes":[{"direction":"X","f_hz":812.5,"zeta":0.031,"k_n_per_m":1.8e7}]})");
    ASSERT_EQ(modes.size(), 1u);
    EXPECT_EQ(modes[0].natural_frequency, 812.5);
    EXPECT_EQ(modes[0].damping_ratio, 0.031);
    EXPECT_EQ(modes[0].modal_stiffness, 1.8e7);
    EXPECT_EQ(modes[0].direction, Direction::X);
    EXPECT_EQ(modes[0].source, ModeSource::Ema);
}

TEST(ImportModalTable, ReportsRowAndField) {
    try {
        import_modal_table(R"({"modes":[{"direction":"X","f_hz":800,"zeta":0.02,"k_n_per_m":1e7},
                                        {"direction":"Y","f_hz":800,"zeta":1.5,"k_n_per_m":1e7}]})");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Parse);
        EXPECT_NE(std::string(e.what()).find("damping_ratio out of range"), std::string::npos);
        EXPECT_NE(e.path().find("row 1"), std::string::npos);
        EXPECT_NE(e.path().find("zeta"), std::string::npos);
    }
    expect_error(ErrorCode::Parse, [] {
        import_modal_table(R"({"modes":[{"direction":"X","f_hz":-5,"zeta":0.02,"k_n_per_m":1e7}]})");
    });
    expect_error(ErrorCode::Parse, [] { import_modal_table(R"({"modes":[{"direction":"X","zeta":0.02}]})"); });
}

TEST(ImportModalTable, EmptyBodyHasNoModes) {
    try {
        import_modal_table(R"({"modes":[]})");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InvalidInput);
        EXPECT_NE(std::string(e.what()).find("no modes"), std::string::npos);
    }
}

TEST(ImportFrfTable, ReadsWellFormedCsv) {
    const FRF frf = import_frf_table(
        "freq_hz,re_gxx,im_gxx,re_gyy,im_gyy\n"
        "100,1e-8,-2e-8,1e-8,-1e-8\n"
        "200,2e-8,-3e-8,2e-8,-2e-8\n"
        "300,3e-8,-4e-8,3e-8,-3e-8\n");
    ASSERT_EQ(frf.size(), 3u);
    EXPECT_EQ(frf.provenance, FrfProvenance::Measured);
    EXPECT_EQ(frf.g_xx[1], std::complex<double>(2e-8, -3e-8));
    EXPECT_EQ(frf.g_yy[2], std::complex<double>(3e-8, -3e-8));
}

TEST(ImportFrfTable, ColumnsMappedByHeader) {
    const FRF frf = import_frf_table(
        "re_gyy,im_gyy,freq_hz,re_gxx,im_gxx\n"
        "5,6,100,1,2\n");
    EXPECT_EQ(frf.frequencies[0], 100.0);
    EXPECT_EQ(frf.g_xx[0], std::complex<double>(1, 2));
    EXPECT_EQ(frf.g_yy[0], std::complex<double>(5, 6));
}

TEST(ImportFrfTable, Errors) {
    try {
        import_frf_table("freq_hz,re_gxx,im_gxx,re_gyy,im_gyy\n100,1,1,1,1\n100,1,1,1,1\n");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Parse);
        EXPECT_NE(std::string(e.what()).find("frequencies not strictly increasing"), std::string::npos);
    }
    expect_error(ErrorCode::Parse, [] { import_frf_table("freq_hz,re_gxx,im_gxx,re_gyy\n100,1,1,1\n"); });
    try {
        import_frf_table("freq_hz,re_gxx,im_gxx,re_gyy,im_gyy\n");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InvalidInput);
        EXPECT_NE(std::string(e.what()).find("no samples"), std::string::npos);
    }
}

TEST(ParseTool, ConvertsUnitsAndReportsPointers) {
    const Tool t = parse_tool(R"({"name":"t","n_flutes":3,"overhang_mm":40,
        "segments":[{"length_mm":50,"diameter_mm":10,"kind":"fluted"}],
        "material":{"name":"wc","youngs_modulus_gpa":600,"density_kg_m3":14500}})");
    EXPECT_EQ(t.geometry.n_flutes, 3);
    EXPECT_DOUBLE_EQ(t.geometry.overhang_length, 0.040);
    EXPECT_DOUBLE_EQ(t.geometry.segments[0].outer_diameter, 0.010);
    EXPECT_DOUBLE_EQ(t.material.youngs_modulus, 600e9);
    EXPECT_EQ(t.geometry.d_eff_factor, 0.8);
    try {
        parse_tool(R"({"name":"t","n_flutes":2,"overhang_mm":40,
            "segments":[{"length_mm":50,"diameter_mm":-10,"kind":"shank"}],
            "material":{"youngs_modulus_gpa":600,"density_kg_m3":14500}})");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InvalidGeometry);
        EXPECT_EQ(e.path(), "/segments/0/diameter_mm");
    }
}

TEST(DominantMode, PicksLowestStiffnessPerDirection) {
    ModeSet modes{canonical_mode(Direction::X), canonical_mode(Direction::X), canonical_mode(Direction::Y)};
    modes[1].modal_stiffness = 1e7;
    EXPECT_EQ(dominant_mode(modes, Direction::X), &modes[1]);
    EXPECT_EQ(dominant_mode(modes, Direction::Y), &modes[2]);
    EXPECT_EQ(dominant_mode(ModeSet{}, Direction::X), nullptr);
}

}  // namespace
}  // namespace sld::tool
