#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gridcpd/io.hpp"
#include "oracles.hpp"

#include <filesystem>
#include <fstream>
#include <random>

using namespace gridcpd;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("gridcpd_io_test_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

Tensor3 awkward_tensor() {
    Tensor3 x(3, 2, 4);
    std::mt19937_64 rng(17);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (double& v : x.raw()) v = gauss(rng);
    x(0, 0, 0) = 0.1;                       // not exactly representable
    x(0, 0, 1) = 1.0 / 3.0;
    x(1, 1, 2) = -0.0;
    x(2, 0, 3) = 5e-324;                    // smallest denormal
    x(2, 1, 3) = 1.7976931348623157e308;    // largest finite
    return x;
}

}  // namespace

TEST_CASE("tensor text round trip is bit-exact for finite values") {
    TempDir tmp;
    const Tensor3 x = awkward_tensor();
    io::write_tensor_text(tmp.path / "t.txt", x);
    const Tensor3 back = io::read_tensor_text(tmp.path / "t.txt");
    REQUIRE(back.dims() == x.dims());
    for (long n = 0; n < x.size(); ++n) {
        CHECK(std::memcmp(&back.raw()[n], &x.raw()[n], 8) == 0);
    }
    // writing again produces identical bytes
    io::write_tensor_text(tmp.path / "t2.txt", back);
    std::ifstream a(tmp.path / "t.txt"), b(tmp.path / "t2.txt");
    std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
    std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
    CHECK(sa == sb);
}

TEST_CASE("tensor binary round trip") {
    TempDir tmp;
    const Tensor3 x = awkward_tensor();
    io::write_tensor_binary(tmp.path / "t.bin", x);
    const Tensor3 back = io::read_tensor_binary(tmp.path / "t.bin");
    CHECK(back.raw() == x.raw());
}

TEST_CASE("tensor readers reject malformed files") {
    TempDir tmp;
    io::atomic_write(tmp.path / "bad1.txt", "not_a_tensor 1 2 3\n");
    CHECK_THROWS(io::read_tensor_text(tmp.path / "bad1.txt"));
    io::atomic_write(tmp.path / "bad2.txt", "tensor 2 2 2\n1 2 3\n");
    CHECK_THROWS(io::read_tensor_text(tmp.path / "bad2.txt"));
    io::atomic_write(tmp.path / "bad3.txt", "tensor 1 1 1\n1 extra\n");
    CHECK_THROWS(io::read_tensor_text(tmp.path / "bad3.txt"));
    io::atomic_write(tmp.path / "bad4.bin", "GCT9garbage");
    CHECK_THROWS(io::read_tensor_binary(tmp.path / "bad4.bin"));
}

TEST_CASE("mask round trip") {
    TempDir tmp;
    MaskTensor m(4, 3, 5);
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 5; ++k) m.set(i, j, k, unit(rng) < 0.4);
    io::write_mask(tmp.path / "m.txt", m);
    CHECK(io::read_mask(tmp.path / "m.txt").raw() == m.raw());

    io::atomic_write(tmp.path / "bad.txt", "mask 1 1 2\n0 2\n");
    CHECK_THROWS(io::read_mask(tmp.path / "bad.txt"));
}

TEST_CASE("fit result round trip") {
    TempDir tmp;
    std::mt19937_64 rng(29);
    FitResult fit;
    fit.factors = oracles::random_factors(5, 4, 6, 3, rng);
    fit.objective_trace = {10.0, 1.0, 0.25, 0.249999};
    fit.converged = true;
    fit.sweeps_used = 3;
    fit.restart_index = 2;
    fit.undetermined_rows[0] = {1, 4};
    fit.undetermined_rows[2] = {0};
    fit.degenerate_columns = {2};
    io::write_fit_result(tmp.path / "fit.txt", fit);
    const FitResult back = io::read_fit_result(tmp.path / "fit.txt");
    CHECK(back.factors.a == fit.factors.a);
    CHECK(back.factors.c == fit.factors.c);
    CHECK(back.objective_trace == fit.objective_trace);
    CHECK(back.converged == fit.converged);
    CHECK(back.sweeps_used == fit.sweeps_used);
    CHECK(back.restart_index == fit.restart_index);
    CHECK(back.undetermined_rows == fit.undetermined_rows);
    CHECK(back.degenerate_columns == fit.degenerate_columns);
}

TEST_CASE("scheme files") {
    TempDir tmp;
    const SlabScheme slab({0, 5, 9}, {23, 47, 71}, 20, 5, 72);
    io::write_slab_scheme(tmp.path / "slab.txt", slab);
    const io::SchemeFile s = io::read_scheme(tmp.path / "slab.txt");
    REQUIRE(s.kind == "slab");
    CHECK(s.slab->horizontal == slab.horizontal);
    CHECK(s.slab->frontal == slab.frontal);
    CHECK(s.slab->dim0 == 20);

    const FiberScheme fiber(FiberPattern{{0, 1, 2, 7}, {0, 1, 2}},
                            FiberPattern{{0, 1, 2, 9}, {3, 4}}, 12, 5, 24);
    io::write_fiber_scheme(tmp.path / "fiber.txt", fiber);
    const io::SchemeFile f = io::read_scheme(tmp.path / "fiber.txt");
    REQUIRE(f.kind == "fiber");
    CHECK(f.fiber->patterns[0].rows == fiber.patterns[0].rows);
    CHECK(f.fiber->patterns[1].cols == fiber.patterns[1].cols);

    io::atomic_write(tmp.path / "bad.txt", "scheme diagonal\ndims 2 2 2\n");
    CHECK_THROWS(io::read_scheme(tmp.path / "bad.txt"));
}

TEST_CASE("meta round trip") {
    TempDir tmp;
    StateTensorMeta meta;
    meta.phase_labels = {"B0.a", "B0.b", "B1.a"};
    meta.zero_injection = {0, 1, 0};
    meta.timestamps_min = {660, 661, 662.5};
    io::write_meta(tmp.path / "meta.txt", meta);
    const StateTensorMeta back = io::read_meta(tmp.path / "meta.txt");
    CHECK(back.phase_labels == meta.phase_labels);
    CHECK(back.zero_injection == meta.zero_injection);
    CHECK(back.timestamps_min == meta.timestamps_min);
}

TEST_CASE("state CSV round trip, full and with holes") {
    TempDir tmp;
    const FeederModel feeder = make_tiny_feeder();
    const SimulationResult sim =
        simulate(feeder, make_profiles(feeder, ProfileMode::Consecutive, 2, 4));

    io::write_state_csv(tmp.path / "full.csv", sim.state, sim.meta);
    const auto records = io::read_state_csv(tmp.path / "full.csv");
    const TensorWithMask round = build_state_tensor(records, sim.meta);
    CHECK(round.mask.all());
    CHECK(round.tensor.raw() == sim.state.raw());

    MaskTensor holes = MaskTensor::ones(sim.state.dim0(), 5, 4);
    holes.set(2, 3, 1, false);
    holes.set(0, 0, 0, false);
    io::write_state_csv(tmp.path / "holey.csv", sim.state, sim.meta, &holes);
    const TensorWithMask sparse =
        build_state_tensor(io::read_state_csv(tmp.path / "holey.csv"), sim.meta);
    CHECK(sparse.mask.observed_count() == holes.observed_count());
    CHECK_FALSE(sparse.mask(2, 3, 1));

    SUBCASE("a header with different measurement names or units is rejected") {
        std::string text = "timestamp_min,phase,re_v_pu,im_v_pu,vmag_pu,p_mw,q_kvar\n";
        io::atomic_write(tmp.path / "units.csv", text);
        CHECK_THROWS(io::read_state_csv(tmp.path / "units.csv"));
    }
    SUBCASE("short rows are rejected with the line number") {
        std::string text = std::string("timestamp_min,phase,re_v_pu,im_v_pu,vmag_pu,p_kw,q_kvar\n") +
                           "660,T000.a,1,0\n";
        io::atomic_write(tmp.path / "short.csv", text);
        try {
            io::read_state_csv(tmp.path / "short.csv");
            FAIL("expected a parse error");
        } catch (const std::exception& e) {
            CHECK(std::string(e.what()).find(":2:") != std::string::npos);
        }
    }
}

TEST_CASE("feeder file round trip and the checked-in models") {
    TempDir tmp;
    const FeederModel f = make_default_feeder();
    io::write_feeder(tmp.path / "f.feeder", f);
    const FeederModel back = io::read_feeder(tmp.path / "f.feeder");
    CHECK(back.name == f.name);
    CHECK(back.phase_count() == f.phase_count());
    REQUIRE(back.buses.size() == f.buses.size());
    for (size_t b = 0; b < f.buses.size(); ++b) {
        CHECK(back.buses[b].name == f.buses[b].name);
        CHECK(back.buses[b].parent == f.buses[b].parent);
        CHECK(back.buses[b].has_phase == f.buses[b].has_phase);
        CHECK(back.buses[b].has_load == f.buses[b].has_load);
        CHECK(back.buses[b].has_solar == f.buses[b].has_solar);
        CHECK(back.buses[b].line_r == f.buses[b].line_r);
        CHECK(back.buses[b].line_x == f.buses[b].line_x);
    }

    // the shipped model files match the in-code generators
    const fs::path data_dir(GRIDCPD_DATA_DIR);
    const FeederModel shipped = io::read_feeder(data_dir / "feeders" / "default50.feeder");
    CHECK(shipped.phase_count() == f.phase_count());
    CHECK(shipped.buses.size() == f.buses.size());
    const FeederModel tiny = io::read_feeder(data_dir / "feeders" / "tiny8.feeder");
    CHECK(tiny.phase_count() == make_tiny_feeder().phase_count());
}

TEST_CASE("feeder parser diagnostics carry line numbers") {
    TempDir tmp;
    io::atomic_write(tmp.path / "bad.feeder",
                     "feeder broken\nbus A slack phases abc\nbus B parent NOPE r 0.1 x 0.1 phases a\n");
    try {
        io::read_feeder(tmp.path / "bad.feeder");
        FAIL("expected a parse error");
    } catch (const std::exception& e) {
        CHECK(std::string(e.what()).find(":3:") != std::string::npos);
    }
    io::atomic_write(tmp.path / "bad2.feeder", "feeder x\nbus A slack phases abq\n");
    CHECK_THROWS(io::read_feeder(tmp.path / "bad2.feeder"));
}

TEST_CASE("atomic_write replaces content completely") {
    TempDir tmp;
    io::atomic_write(tmp.path / "f.txt", "first version, quite long indeed\n");
    io::atomic_write(tmp.path / "f.txt", "second\n");
    std::ifstream in(tmp.path / "f.txt");
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(content == "second\n");
    CHECK_FALSE(fs::exists(tmp.path / "f.txt.tmp"));
}
