// Copyright 2026 The nova authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "nova/scenario.hpp"

using namespace nova;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("nova-test-" + std::to_string(Catch::rngSeed()) + "-" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
    void write(const std::string& name, const std::string& content) const {
        std::ofstream out(path / name);
        out << content;
    }
};

const char* kTwoVarProgram = "rand bit[8] a; rand bit[8] b;";

std::string basic_scenario_json() {
    return R"({
      "name": "basic",
      "budget": 1000.0,
      "categories": [
        {"name": "c0", "program": "c0.crv", "base_cost": 10.0}
      ],
      "signals": [
        {"name": "sum", "expr": "a + b"},
        {"name": "rare", "expr": "a == 171 && b == 205"}
      ],
      "coverage": {
        "coverpoints": [
          {"name": "cp_sum", "signal": "sum", "bins": [{"split": {"lo": 0, "hi": 511, "count": 8}}]},
          {"name": "cp_rare", "signal": "rare", "bins": [{"value": 1}]}
        ]
      }
    })";
}

}  // namespace

TEST_CASE("scenario loads and resolves") {
    TempDir dir;
    dir.write("c0.crv", kTwoVarProgram);
    dir.write("s.scn", basic_scenario_json());
    Scenario sc = load_scenario(dir.path / "s.scn");
    CHECK(sc.categories.size() == 1);
    CHECK(sc.model.bin_count() == 9);
    CHECK(sc.variables.size() == 2);
    CHECK(sc.budget == 1000.0);
}

TEST_CASE("missing program file is a dangling reference") {
    TempDir dir;
    dir.write("s.scn", basic_scenario_json());
    CHECK_THROWS_AS(load_scenario(dir.path / "s.scn"), ConfigError);
}

TEST_CASE("malformed json is a schema error") {
    TempDir dir;
    dir.write("s.scn", "{ not json");
    CHECK_THROWS_AS(load_scenario(dir.path / "s.scn"), ConfigError);
}

TEST_CASE("signal referencing undeclared variable is rejected") {
    TempDir dir;
    dir.write("c0.crv", kTwoVarProgram);
    std::string bad = basic_scenario_json();
    bad.replace(bad.find("a + b"), 5, "a + z");
    dir.write("s.scn", bad);
    CHECK_THROWS_AS(load_scenario(dir.path / "s.scn"), ConfigError);
}

TEST_CASE("unsatisfiable category fails the load-time smoke solve") {
    TempDir dir;
    dir.write("c0.crv", "rand bit[8] a; rand bit[8] b; constraint { a < 2 } constraint { a > 5 }");
    dir.write("s.scn", basic_scenario_json());
    CHECK_THROWS_AS(load_scenario(dir.path / "s.scn"), ConfigError);
}

TEST_CASE("signal expressions evaluate over the stimulus") {
    TempDir dir;
    dir.write("c0.crv", kTwoVarProgram);
    dir.write("s.scn", basic_scenario_json());
    Scenario sc = load_scenario(dir.path / "s.scn");

    Stimulus stim;
    stim.values = {3, 4};
    auto result = simulate(sc, 0, stim, 42);
    CHECK(result.trace.at("sum") == 7);
    CHECK(result.trace.at("rare") == 0);
    CHECK(result.runtime >= 9.0);
    CHECK(result.runtime <= 11.0);
    CHECK(result.coverage.size() == 9);
    CHECK(result.coverage.test(0));  // sum 7 in [0:63]
}

TEST_CASE("simulate is deterministic") {
    TempDir dir;
    dir.write("c0.crv", kTwoVarProgram);
    dir.write("s.scn", basic_scenario_json());
    Scenario sc = load_scenario(dir.path / "s.scn");
    Stimulus stim;
    stim.values = {100, 50};
    auto r1 = simulate(sc, 0, stim, 7);
    auto r2 = simulate(sc, 0, stim, 7);
    CHECK(r1.trace == r2.trace);
    CHECK(r1.runtime == r2.runtime);
    CHECK(r1.coverage == r2.coverage);
}

TEST_CASE("constraint violation indicates a solver bug") {
    TempDir dir;
    dir.write("c0.crv", "rand bit[8] a; rand bit[8] b; constraint { a < 10 }");
    dir.write("s.scn", basic_scenario_json());
    Scenario sc = load_scenario(dir.path / "s.scn");
    Stimulus stim;
    stim.values = {200, 0};
    CHECK_THROWS_AS(simulate(sc, 0, stim, 1), ConstraintViolation);
}

TEST_CASE("rare bin needs the matching pattern") {
    TempDir dir;
    dir.write("c0.crv", kTwoVarProgram);
    dir.write("s.scn", basic_scenario_json());
    Scenario sc = load_scenario(dir.path / "s.scn");
    const auto& prog = sc.categories[0].program;
    auto space = bit_blast(prog, {});

    // Exact hit probability under fair-coin stimuli is 2^-16, so ~0.15
    // expected hits in 10^4 draws.
    int hits = 0;
    auto uniform = ThetaVector::uniform(16);
    for (int i = 0; i < 10000; ++i) {
        auto stim = solve(prog, space, uniform, derive_seed(3, "rare-uniform", i)).stimulus;
        auto res = simulate(sc, 0, stim, static_cast<std::uint64_t>(i));
        hits += res.coverage.test(8) ? 1 : 0;
    }
    CHECK(hits <= 3);

    // Bias every bit toward the 0xAB / 0xCD pattern: hits become routine.
    std::vector<double> biased(16);
    for (int b = 0; b < 8; ++b) {
        biased[static_cast<std::size_t>(b)] = ((0xAB >> b) & 1) ? 0.98 : 0.02;
        biased[static_cast<std::size_t>(8 + b)] = ((0xCD >> b) & 1) ? 0.98 : 0.02;
    }
    hits = 0;
    ThetaVector theta(biased);
    for (int i = 0; i < 100; ++i) {
        auto stim = solve(prog, space, theta, derive_seed(3, "rare-biased", i)).stimulus;
        auto res = simulate(sc, 0, stim, static_cast<std::uint64_t>(i));
        hits += res.coverage.test(8) ? 1 : 0;
    }
    CHECK(hits >= 40);
}

TEST_CASE("signal noise is bounded and seeded") {
    TempDir dir;
    dir.write("c0.crv", kTwoVarProgram);
    std::string with_noise = basic_scenario_json();
    with_noise.replace(with_noise.find("\"expr\": \"a + b\"}"), 16,
                       "\"expr\": \"a + b\", \"noise\": 3}");
    dir.write("s.scn", with_noise);
    Scenario sc = load_scenario(dir.path / "s.scn");
    Stimulus stim;
    stim.values = {10, 10};
    bool saw_nonzero = false;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        auto r = simulate(sc, 0, stim, seed);
        std::int64_t delta = r.trace.at("sum") - 20;
        CHECK(delta >= 0);
        CHECK(delta <= 3);
        saw_nonzero = saw_nonzero || delta > 0;
        CHECK(simulate(sc, 0, stim, seed).trace == r.trace);
    }
    CHECK(saw_nonzero);
}
