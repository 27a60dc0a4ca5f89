#include "combdrive/cli/config.hpp"

#include <catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

using namespace combdrive;
using namespace combdrive::cli;

namespace {

struct RunResult {
    int code;
    std::string out;
    std::string err;
};

std::string slurp(const std::string &path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Runs the executable with `args` and an optional environment prefix.
RunResult run(const std::string &args, const std::string &env = "unset COMBDRIVE_CONFIG; ") {
    const std::string out = "cli_test_stdout.txt", err = "cli_test_stderr.txt";
    const std::string cmd = env + "\"" COMBDRIVE_CLI "\" " + args + " > " + out + " 2> " + err;
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

void write_file(const std::string &path, const std::string &text) {
    std::ofstream(path) << text;
}

std::vector<std::string> lines_of(const std::string &text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) {
        if (!line.empty()) out.push_back(line);
    }
    return out;
}

} // namespace

TEST_CASE("config survives a JSON round trip", "[cli]") {
    Config c;
    c.beta = 0.2;
    c.tv = 5.5;
    c.n = 3;
    c.symmetry = "both";
    c.delta_grid = {0.0, 3e-4, 7e-3};
    c.format = "jsonl";
    c.workers = 3;
    const auto back = from_json(to_json(c));
    CHECK(to_json(back) == to_json(c));
    CHECK(back.delta_grid == c.delta_grid);
    CHECK(back.n == c.n);
    // Through text as well: doubles print with enough digits.
    const auto reparsed = from_json(nlohmann::json::parse(to_json(Config{}).dump()));
    CHECK(reparsed.tv == Config{}.tv);
}

TEST_CASE("config rejects unknown keys and bad values", "[cli]") {
    CHECK_THROWS_AS(from_json(nlohmann::json{{"betta", 0.2}}), InvalidParameters);
    CHECK_THROWS_AS(from_json(nlohmann::json{{"m", "two"}}), InvalidParameters);
    Config c;
    c.format = "xml";
    CHECK_THROWS_AS(c.validate(), InvalidParameters);
    CHECK_THROWS_AS(parse_grid("0,1e-4,x"), InvalidParameters);
    CHECK(parse_grid("0,1e-4") == std::vector<double>{0.0, 1e-4});
}

TEST_CASE("precedence: flags over file over defaults", "[cli]") {
    write_file("cli_test_config.json", R"({"beta": 0.2, "m": 4, "format": "jsonl"})");
    const auto def = run("period --print-config");
    REQUIRE(def.code == 0);
    CHECK(nlohmann::json::parse(def.out) == to_json(Config{}));

    const auto env = run("period --print-config", "COMBDRIVE_CONFIG=cli_test_config.json ");
    REQUIRE(env.code == 0);
    const auto je = nlohmann::json::parse(env.out);
    CHECK(je["beta"] == 0.2);
    CHECK(je["m"] == 4);
    CHECK(je["format"] == "jsonl");

    const auto flag = run("stability --config cli_test_config.json --beta 0.22 --print-config");
    REQUIRE(flag.code == 0);
    const auto jf = nlohmann::json::parse(flag.out);
    CHECK(jf["beta"] == 0.22);
    CHECK(jf["m"] == 4);

    // The printed config is itself a valid config file with the same effect.
    write_file("cli_test_roundtrip.json", flag.out);
    const auto again = run("stability --config cli_test_roundtrip.json --print-config");
    CHECK(nlohmann::json::parse(again.out) == jf);
}

TEST_CASE("exit codes", "[cli]") {
    const auto bad_pair = run("orbit --m 1 --p 1");
    CHECK(bad_pair.code == 2);
    CHECK(bad_pair.err.find("nu_1 = 0") != std::string::npos);
    CHECK(run("period --beta -1").code == 2);
    CHECK(run("period --v0 1.5").code == 2);
    CHECK(run("period --format xml").code == 2);
    CHECK(run("continue --delta-grid 0,0.6 --no-slope").code == 2);
    CHECK(run("period --config does_not_exist.json").code == 2);
    CHECK(run("nonsense").code == 2);
    CHECK(run("period --grid-size 12").code == 0);
    CHECK(run("verify --criteria 1,2 --no-control").code == 0);
    // A failing criterion and the loosened integrator are verification failures.
    CHECK(run("verify --criteria 8 --no-control").code == 1);
    CHECK(run("verify --criteria 4 --loosen --no-control").code == 1);
}

TEST_CASE("output is deterministic and independent of the worker count", "[cli]") {
    const auto a = run("stability --m-max 5 --symmetry both --workers 1");
    const auto b = run("stability --m-max 5 --symmetry both --workers 4");
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    const auto p1 = run("period --grid-size 20 --format jsonl");
    const auto p2 = run("period --grid-size 20 --format jsonl --workers 3");
    CHECK(p1.out == p2.out);
    CHECK(lines_of(p1.out).size() == 20);
}

TEST_CASE("orbit writes a trajectory and a summary", "[cli]") {
    const auto r = run("orbit --n 1 --symmetry even --samples 11 --out cli_test_orbit.csv");
    REQUIRE(r.code == 0);
    const auto rows = lines_of(slurp("cli_test_orbit.csv"));
    REQUIRE(rows.size() == 12);
    CHECK(rows[0] == "t,x,xdot,H");
    const auto summary = nlohmann::json::parse(r.out);
    CHECK(summary["zeros"] == 2);
    CHECK(summary["symmetry"] == "even");
}

TEST_CASE("continue resumes from its own output", "[cli]") {
    const std::string common = "continue --m 2 --p 1 --symmetry odd --no-slope --format jsonl ";
    const auto full = run(common + "--delta-grid 0,1e-4,2e-4");
    REQUIRE(full.code == 0);
    const auto full_lines = lines_of(full.out);
    REQUIRE(full_lines.size() == 3);

    std::remove("cli_test_family.jsonl");
    REQUIRE(run(common + "--delta-grid 0,1e-4 --out cli_test_family.jsonl").code == 0);
    REQUIRE(run(common + "--delta-grid 0,1e-4,2e-4 --resume cli_test_family.jsonl "
                         "--out cli_test_family.jsonl")
                .code == 0);
    const auto resumed = lines_of(slurp("cli_test_family.jsonl"));
    REQUIRE(resumed.size() == 3);
    for (std::size_t k = 0; k < 3; ++k) {
        const auto a = nlohmann::json::parse(full_lines[k]);
        const auto b = nlohmann::json::parse(resumed[k]);
        CHECK(a["delta"] == b["delta"]);
        CHECK(std::abs(a["trace"].get<double>() - b["trace"].get<double>()) <= 1e-14);
        CHECK(b.contains("residuals"));
        CHECK(b.contains("init"));
    }
}
