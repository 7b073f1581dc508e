#include <doctest.h>

#include <filesystem>

#include "jit/io.hpp"
#include "oracles.hpp"

using namespace jit;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "jit_test_io";
    fs::create_directories(dir);
    return dir / name;
}

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::Parameter;
}

} // namespace

TEST_CASE("JITG layout") {
    const io::Bytes b = io::encode_grid(Grid({1, 1, 1}));
    REQUIRE(b.size() == 24);
    const io::Bytes expect{'J', 'I', 'T', 'G', 1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0};
    CHECK(b == expect);

    Grid one({1, 1, 1});
    one.at(0, 0, 0) = 1.0f;
    const io::Bytes b1 = io::encode_grid(one);
    CHECK(b1[20] == 0x00);
    CHECK(b1[23] == 0x3F); // little-endian 0x3F800000
    CHECK(b1[22] == 0x80);
}

TEST_CASE("JITG round trip and errors") {
    Rng rng(12);
    const Grid g = gaussian_grid({3, 5, 2}, rng);
    CHECK(io::decode_grid(io::encode_grid(g)) == g);
    const fs::path p = scratch("g.jitg");
    io::write_grid(p, g);
    CHECK(io::read_grid(p) == g);

    io::Bytes bad = io::encode_grid(g);
    bad[0] = 'X';
    CHECK(kind_of([&] { io::decode_grid(bad); }) == ErrorKind::Format);

    io::Bytes version = io::encode_grid(g);
    version[4] = 2;
    CHECK_THROWS_WITH(io::decode_grid(version), doctest::Contains("offset 4"));

    io::Bytes cut = io::encode_grid(g);
    cut.resize(cut.size() - 3);
    const std::string at_end = "offset " + std::to_string(cut.size());
    CHECK_THROWS_WITH(io::decode_grid(cut), doctest::Contains(at_end.c_str()));
    CHECK_THROWS_WITH(io::decode_grid(io::Bytes(cut.begin(), cut.begin() + 10)), doctest::Contains("header"));

    io::Bytes extra = io::encode_grid(g);
    extra.push_back(0);
    CHECK_THROWS_WITH(io::decode_grid(extra), doctest::Contains("trailing"));
}

TEST_CASE("PGM") {
    const io::Bytes flat = io::encode_pgm(Eigen::MatrixXd::Constant(2, 3, 4.2));
    const std::string header = "P5\n3 2\n255\n";
    REQUIRE(flat.size() == header.size() + 6);
    CHECK(std::string(flat.begin(), flat.begin() + static_cast<long>(header.size())) == header);
    for (std::size_t j = header.size(); j < flat.size(); ++j) CHECK(flat[j] == 128);

    Eigen::MatrixXd ramp(1, 3);
    ramp << -1.0, 0.5, 2.0;
    const io::Bytes r = io::encode_pgm(ramp);
    const std::size_t h = std::string("P5\n3 1\n255\n").size();
    CHECK(r[h] == 0);
    CHECK(r[h + 1] == 128);
    CHECK(r[h + 2] == 255);

    Grid impulse({3, 3, 1});
    impulse.at(1, 1, 0) = 9.0f;
    const fs::path p = scratch("imp.pgm");
    io::write_pgm(p, importance_map(impulse));
    const io::Bytes img = io::read_file(p);
    const std::size_t h3 = std::string("P5\n3 3\n255\n").size();
    REQUIRE(img.size() == h3 + 9);
    for (std::size_t j = h3; j < img.size(); ++j) CHECK(img[j] == 128);
}

TEST_CASE("config parsing") {
    const json minimal = json::parse(R"({"preset": "jit4x", "shape": [32, 32, 4],
                                         "field": {"kind": "gaussian-bump"}, "seed": 7})");
    const io::ParsedConfig pc = io::parse_config(minimal);
    CHECK(pc.warnings.empty());
    CHECK(pc.config.schedule.preset == std::optional<std::string>("jit4x"));
    CHECK(pc.config.seed == 7);
    CHECK(pc.config.shape == GridShape{32, 32, 4});
    CHECK(io::resolve_schedule(pc.config).nfe() == 18);

    json missing = minimal;
    missing.erase("seed");
    try {
        io::parse_config(missing);
        FAIL("expected config error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Config);
        CHECK(std::string(e.what()).find("seed") != std::string::npos);
    }

    json unknown = minimal;
    unknown["colour"] = "blue";
    unknown["field"]["shade"] = 1;
    const io::ParsedConfig pw = io::parse_config(unknown);
    CHECK(pw.warnings.size() == 2);

    json both = minimal;
    both["schedule"] = {{"stages", json::array({{{"steps", 2}, {"sparsity", 1.0}}})}, {"n_steps", 2}};
    CHECK(kind_of([&] { io::parse_config(both); }) == ErrorKind::Config);

    json wrong_type = minimal;
    wrong_type["seed"] = "seven";
    CHECK(kind_of([&] { io::parse_config(wrong_type); }) == ErrorKind::Config);
}

TEST_CASE("config round trip") {
    io::RunConfig cfg;
    cfg.schedule.stages = {{3, 0.3}, {2, 1.0}};
    cfg.schedule.n_steps = 5;
    cfg.schedule.alpha = 1.0;
    cfg.schedule.beta = 2.0;
    cfg.schedule.name = "mine";
    cfg.shape = {10, 12, 3};
    cfg.field.kind = "checkerboard";
    cfg.field.sigma1 = 0.25;
    cfg.seed = 123456789012345ULL;
    cfg.invert_time = true;
    cfg.shared_noise = true;
    cfg.trajectory_stride = 2;
    cfg.dump.grid = "out.jitg";
    cfg.cost = {0.5, 2.0, 1.0, 8.0};
    cfg.baseline_steps = 30;
    const fs::path p = scratch("cfg.json");
    io::write_config(p, cfg);
    const io::ParsedConfig back = io::read_config(p);
    CHECK(back.warnings.empty());
    CHECK(back.config == cfg);

    const StageSchedule s = io::resolve_schedule(cfg);
    CHECK(s.name == "mine");
    CHECK(s.invert_time);
    CHECK(io::sampler_options(cfg).shared_noise);
    CHECK(io::make_field(cfg)->descriptor().find("gaussian-flow") != std::string::npos);

    CHECK(kind_of([] { io::read_config("/nonexistent/cfg.json"); }) != ErrorKind::Dimension);
}

TEST_CASE("report and csv") {
    const GridShape shape{8, 8, 1};
    const GaussianFlowField field(make_target_image("gaussian-bump", shape), 0.0);
    const RunReport r = run(preset_schedule("jit7x"), field, shape, 5);
    const json j = io::report_to_json(r);
    CHECK(j["nfe"] == 11);
    CHECK(j["steps"].size() == 11);
    CHECK(j["transitions"].size() == 2);
    CHECK(j["chain_sizes"] == json::array({20, 38, 64}));
    CHECK(j["transitions"][0]["activated_count"] == 18);
    CHECK(io::dump_json(j) == io::dump_json(io::report_to_json(run(preset_schedule("jit7x"), field, shape, 5))));
    CHECK(io::dump_json(j).back() == '\n');

    const std::string m = io::metrics_csv(r);
    CHECK(m.rfind("step,t,stage,m_k,cost\n", 0) == 0);
    CHECK(std::count(m.begin(), m.end(), '\n') == 12);

    const std::string sc = io::schedule_csv(preset_schedule("jit4x"), 1024);
    CHECK(sc.find("358") != std::string::npos);
    CHECK(io::round_sig9(1.0 / 3.0) == doctest::Approx(0.333333333).epsilon(1e-12));
}

TEST_CASE("replay fixture round trip") {
    std::map<ReplayKey, Block> entries;
    Rng rng(2);
    entries[{{0, 3}, 0.25}] = oracle::random_block(2, 3, rng);
    entries[{{1, 2, 3}, 0.5}] = oracle::random_block(3, 3, rng);
    const fs::path dir = scratch("replay");
    fs::remove_all(dir);
    io::write_replay_fixture(dir, entries);
    const auto back = io::read_replay_fixture(dir / "manifest.json");
    REQUIRE(back.size() == 2);
    for (const auto& [k, v] : entries) CHECK(back.at(k) == v);
}
