#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "coastflow/config.hpp"
#include "coastflow/domain.hpp"
#include "coastflow/errors.hpp"
#include "coastflow/forcing.hpp"

#include <cmath>

using namespace coastflow;

namespace {

GridGeometry reference_geometry() {
    GridGeometry g;
    g.nx = 28;
    g.nz = 40;
    g.lx = 84.0;
    g.lz = 4.0;
    g.upland_elevation = 4.0;
    g.stream_elevation = 1.2;
    return g;
}

std::string reference_config_text();

} // namespace

TEST_CASE("build_grid reference dimensions") {
    const GridSpec g = build_grid(reference_geometry());
    CHECK(g.dx == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(g.dz == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(g.n_cells() == 1120);
    CHECK(g.n_active > 0);
    CHECK(g.n_active <= 1120);
    // dx*nx = lx and dz*nz = lz within one ULP
    CHECK(g.dx * static_cast<double>(g.nx) == doctest::Approx(g.lx).epsilon(1e-15));
    CHECK(g.dz * static_cast<double>(g.nz) == doctest::Approx(g.lz).epsilon(1e-15));
}

TEST_CASE("build_grid single degenerate cell") {
    GridGeometry g;
    g.nx = 1;
    g.nz = 1;
    g.lx = 1.0;
    g.lz = 1.0;
    g.upland_elevation = 0.6;
    g.stream_elevation = 0.6;
    const GridSpec grid = build_grid(g); // center z = 0.5 <= 0.6 -> active
    CHECK(grid.dx == 1.0);
    CHECK(grid.dz == 1.0);
    CHECK(grid.n_active == 1);

    g.upland_elevation = g.stream_elevation = 0.4; // center above surface
    CHECK_THROWS_AS(build_grid(g), ConfigError);   // no active cells
}

TEST_CASE("flat surface at domain top activates every cell") {
    GridGeometry g = reference_geometry();
    g.upland_elevation = 4.0;
    g.stream_elevation = 4.0;
    const GridSpec grid = build_grid(g);
    CHECK(grid.n_active == 1120);
}

TEST_CASE("active mask is monotone in surface elevation") {
    GridGeometry lo = reference_geometry();
    GridGeometry hi = reference_geometry();
    hi.upland_elevation += 0.35; // raise one endpoint; every column surface rises
    const GridSpec glo = build_grid(lo);
    const GridSpec ghi = build_grid(hi);
    for (Index i = 0; i < glo.n_cells(); ++i)
        if (glo.active[static_cast<size_t>(i)]) CHECK(ghi.active[static_cast<size_t>(i)]);
}

TEST_CASE("build_grid rejects non-positive dimensions") {
    GridGeometry g = reference_geometry();
    g.nx = 0;
    CHECK_THROWS_WITH_AS(build_grid(g), doctest::Contains("nx"), ConfigError);
    g = reference_geometry();
    g.lz = -1.0;
    CHECK_THROWS_AS(build_grid(g), ConfigError);
}

TEST_CASE("tidal forcing with no components is constant") {
    Vector times = Vector::LinSpaced(11, 0.0, 10.0);
    const BoundaryForcing f = synth_tidal_forcing(0.8, {}, 25.0, 3.5, times);
    CHECK(f.stream_stage.minCoeff() == 0.8);
    CHECK(f.stream_stage.maxCoeff() == 0.8);
    CHECK(f.stream_salinity(3) == 25.0);
    CHECK(f.upland_head(7) == 3.5);
}

TEST_CASE("tidal forcing time-mean vanishes over whole periods") {
    // one component, dense sampling over an integer number of periods
    const double period = 0.5;
    const Index n = 4000;
    Vector times(n);
    for (Index i = 0; i < n; ++i)
        times(i) = static_cast<double>(i) * (10.0 * period / static_cast<double>(n));
    const BoundaryForcing f = synth_tidal_forcing(0.8, {{0.3, period, 0.0}}, 25.0, 3.5, times);
    CHECK(f.stream_stage.mean() == doctest::Approx(0.8).epsilon(1e-6));
}

TEST_CASE("tidal forcing is periodic at matching sample points") {
    const double period = 0.5175;
    std::vector<double> base;
    for (int i = 0; i < 200; ++i) base.push_back(i * 0.01);
    Vector times(static_cast<Index>(base.size() * 2));
    for (size_t i = 0; i < base.size(); ++i) times(static_cast<Index>(i)) = base[i];
    for (size_t i = 0; i < base.size(); ++i)
        times(static_cast<Index>(base.size() + i)) = base[i] + period;
    std::sort(times.data(), times.data() + times.size());
    const BoundaryForcing f = synth_tidal_forcing(0.0, {{0.5, period, 0.0}}, 0.0, 3.5, times);
    // closed form: stage(t) == stage(t + period)
    for (size_t i = 0; i < base.size(); ++i) {
        const double a = 0.5 * std::sin(2.0 * M_PI * base[i] / period);
        const double b = 0.5 * std::sin(2.0 * M_PI * (base[i] + period) / period);
        CHECK(std::abs(a - b) < 1e-9);
    }
    CHECK(f.times.size() == times.size());
}

TEST_CASE("tidal forcing rejects empty times and bad periods") {
    CHECK_THROWS_AS(synth_tidal_forcing(0.8, {}, 25.0, 3.5, Vector()), ConfigError);
    Vector times = Vector::LinSpaced(3, 0.0, 2.0);
    CHECK_THROWS_AS(synth_tidal_forcing(0.8, {{0.1, -1.0, 0.0}}, 25.0, 3.5, times), ConfigError);
}

TEST_CASE("forcing determinism") {
    Vector times = Vector::LinSpaced(100, -10.0, 10.0);
    const auto a = synth_tidal_forcing(0.7, {{0.35, 0.5175, 0.1}}, 25.0, 3.5, times);
    const auto b = synth_tidal_forcing(0.7, {{0.35, 0.5175, 0.1}}, 25.0, 3.5, times);
    CHECK(a.stream_stage == b.stream_stage);
}

namespace {

std::string reference_config_text() {
    FullConfig c;
    c.grid = reference_geometry();
    c.run.spin_up_duration = 1460.0;
    c.run.prediction_duration = 7260.0;
    c.run.output_interval = 30.0;
    c.forcing.tide = {{0.35, 0.5175, 0.0}, {0.10, 14.77, 0.0}};
    c.wells.x = {60.0, 69.0, 78.0};
    c.wells.z = {0.55, 0.95, 1.15};
    c.ufno.pad_t = 5; // 243 -> 248
    return serialize_config(c);
}

} // namespace

TEST_CASE("parse_config reference values and n_outputs") {
    const FullConfig c = parse_config_text(reference_config_text(), "<test>");
    CHECK(c.run.spin_up_duration == 1460.0);
    CHECK(c.run.prediction_duration == 7260.0);
    CHECK(c.run.output_interval == 30.0);
    CHECK(c.run.n_outputs() == 243);
}

TEST_CASE("parse_config rejects nx = 0 naming the key") {
    std::string text = reference_config_text();
    const auto pos = text.find("nx = 28");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 7, "nx = 0");
    CHECK_THROWS_WITH_AS(parse_config_text(text, "<test>"), doctest::Contains("nx"), ConfigError);
}

TEST_CASE("parse_config missing key is named") {
    std::string text = reference_config_text();
    const auto pos = text.find("alpha = ");
    const auto eol = text.find('\n', pos);
    text.erase(pos, eol - pos + 1);
    CHECK_THROWS_WITH_AS(parse_config_text(text, "<test>"), doctest::Contains("retention.alpha"),
                         ConfigError);
}

TEST_CASE("config round-trips through serialization") {
    const std::string text = reference_config_text();
    const FullConfig c1 = parse_config_text(text, "<test>");
    const std::string text2 = serialize_config(c1);
    const FullConfig c2 = parse_config_text(text2, "<test2>");
    CHECK(serialize_config(c2) == text2);
}
