#include "cli.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kToy = std::string(FINMEM_SOURCE_DIR) + "/configs/toy.json";

struct Run {
    int code;
    std::string out, err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = finmem::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("finmem_cli_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

json read_json(const fs::path& p) {
    std::ifstream in(p);
    return json::parse(in);
}

fs::path write_variant(const fs::path& dir, const std::function<void(json&)>& edit) {
    std::ifstream in(kToy);
    json j = json::parse(in);
    edit(j);
    const fs::path p = dir / "variant.json";
    std::ofstream(p) << j.dump(2);
    return p;
}

} // namespace

TEST_CASE("validate accepts the toy model and writes a manifest") {
    const auto dir = scratch("validate");
    const auto r = run({"validate", "--model", kToy, "--out", dir.string()});
    CHECK(r.code == 0);
    CHECK(read_json(dir / "violations.json")["violations"].empty());
    CHECK(read_json(dir / "model.json")["encoding"] == "float64");
    const auto m = read_json(dir / "manifest.json");
    CHECK(m["command"] == "validate");
    CHECK(m["exit_code"] == 0);
    CHECK(m["generator"] == "philox4x32-10");
    CHECK(m["config_fnv1a"].get<std::string>().size() > 0);
    CHECK(m.contains("wall_time_seconds"));
}

TEST_CASE("bad configs exit 2 and name the field") {
    const auto dir = scratch("bad");
    const auto p = write_variant(dir, [](json& j) { j["chain"]["matrix"] = {{0.9, 0.1}}; });
    const auto r = run({"solve", "--model", p.string(), "--out", (dir / "o").string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("chain.matrix") != std::string::npos);

    CHECK(run({"solve", "--model", (dir / "missing.json").string()}).code == 2);
    CHECK(run({"solve"}).code == 2);
    CHECK(run({"frobnicate", "--model", kToy}).code == 2);
    CHECK(run({"solve", "--model", kToy, "--out", (dir / "o").string(), "--mixing", "nope"}).code == 2);
    CHECK(run({"--help"}).code == 0);
}

TEST_CASE("models that break an invariant exit 4") {
    const auto dir = scratch("invalid");
    const auto p = write_variant(dir, [](json& j) { j["chain"]["matrix"] = {{0.9, 0.09}, {0.2, 0.8}}; });
    const auto v = run({"validate", "--model", p.string(), "--out", (dir / "v").string()});
    CHECK(v.code == 4);
    const auto list = read_json(dir / "v" / "violations.json")["violations"];
    REQUIRE_FALSE(list.empty());
    CHECK(list[0]["rule"] == "chain-row-stochastic");
    CHECK(run({"solve", "--model", p.string(), "--out", (dir / "s").string()}).code == 4);
}

TEST_CASE("solve, then evaluate the stored policy") {
    const auto dir = scratch("solve");
    const auto s = run({"solve", "--model", kToy, "--out", (dir / "s").string(), "--tol", "1e-9"});
    REQUIRE(s.code == 0);
    const auto solved = read_json(dir / "s" / "solve.json");
    CHECK(solved["iterations"].get<std::size_t>() <= solved["predicted_sweeps"].get<std::size_t>());
    CHECK(solved["policy"]["choice"].size() == 25);
    CHECK(fs::exists(dir / "s" / "residuals.csv"));

    const auto e = run({"evaluate", "--model", kToy, "--out", (dir / "e").string(), "--tol", "1e-9",
                        "--policy", (dir / "s" / "solve.json").string()});
    REQUIRE(e.code == 0);
    const auto ev = read_json(dir / "e" / "evaluate.json");
    CHECK(ev["gap_to_optimal"].get<double>() <= 2e-9);
    CHECK(ev["monte_carlo"]["episodes"] == 500);
    CHECK(ev["monte_carlo_within_3se"] == true);
}

TEST_CASE("non-convergence exits 3") {
    const auto dir = scratch("noconv");
    const auto p = write_variant(dir, [](json& j) { j["solver"]["max_iters"] = 2; });
    CHECK(run({"solve", "--model", p.string(), "--out", (dir / "o").string()}).code == 3);
    CHECK(read_json(dir / "o" / "manifest.json")["exit_code"] == 3);
}

TEST_CASE("small bound, lipschitz, belief-solve and simulate runs") {
    const auto dir = scratch("misc");
    const auto p = write_variant(dir, [](json& j) { j["dynamics"]["family"] = "truncated_gaussian"; });
    const auto b = run({"bound", "--model", p.string(), "--out", (dir / "b").string(), "--iters", "10",
                        "--belief-res", "8", "--seeds", "2", "--seed", "4"});
    CHECK(b.code == 0);
    CHECK(fs::exists(dir / "b" / "bound_seed4.csv"));
    CHECK(fs::exists(dir / "b" / "bound_seed5.csv"));
    CHECK(read_json(dir / "b" / "manifest.json")["seeds"] == json({4, 5}));

    CHECK(run({"lipschitz", "--model", kToy, "--out", (dir / "l").string(), "--max-memory", "2"}).code == 0);
    const auto lj = read_json(dir / "l" / "lipschitz.json")["sweep"];
    REQUIRE(lj.size() == 3);
    CHECK(lj[2]["value"].get<double>() == doctest::Approx(0.343));

    CHECK(run({"belief-solve", "--model", kToy, "--out", (dir / "bs").string()}).code == 0);
    CHECK(run({"simulate", "--model", kToy, "--out", (dir / "sim").string(), "--episodes", "3"}).code == 0);
    CHECK(fs::exists(dir / "sim" / "episodes.jsonl"));
    CHECK(fs::exists(dir / "sim" / "episodes.bin"));
}

TEST_CASE("output directory defaults to the environment variable") {
    const auto dir = scratch("env");
    ::setenv(finmem::cli::kOutDirEnv, dir.string().c_str(), 1);
    CHECK(run({"validate", "--model", kToy}).code == 0);
    ::unsetenv(finmem::cli::kOutDirEnv);
    CHECK(fs::exists(dir / "manifest.json"));
}

TEST_CASE("fnv1a reference values") {
    CHECK(finmem::cli::fnv1a("") == 0xcbf29ce484222325ull);
    CHECK(finmem::cli::fnv1a("a") == 0xaf63dc4c8601ec8cull);
}
