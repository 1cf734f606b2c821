// SPDX-License-Identifier: Apache-2.0
//
// End-to-end tests of the command-line binary: each case invokes the real
// executable in a scratch directory and inspects exit codes and artifacts.
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "boat/sequence.hpp"

using namespace boat;
namespace fs = std::filesystem;

namespace {

struct CmdResult {
    int exit_code = -1;
    std::string output;  // stdout + stderr
};

CmdResult run_cmd(const std::string& args) {
    const std::string out_file = "cli_cmd_output.txt";
    const std::string cmd =
        std::string(BOAT_CLI_PATH) + " " + args + " > " + out_file + " 2>&1";
    const int status = std::system(cmd.c_str());
    CmdResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(out_file);
    std::ostringstream os;
    os << in.rdbuf();
    r.output = os.str();
    return r;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

int line_count(const std::string& text) {
    int n = 0;
    for (char c : text) n += c == '\n';
    return n;
}

void write_space() {
    std::vector<int> positions;
    for (int i = 0; i < 6; ++i) positions.push_back(i);
    const MutationSpace space = MutationSpace::create(
        Sequence::validate("AAAAAA", 6), positions, std::vector<std::string>(6, "ACD"), 2,
        LiabilityRules::none());
    atomic_write_file("cli_space.txt", space.to_text());
}

void write_config() {
    write_space();
    atomic_write_file("cli_config.json", R"({
  "space_file": "cli_space.txt",
  "method": "boat-ehvi",
  "budget": 30,
  "n_init": 10,
  "init_max_mut": 2,
  "seed": 3,
  "reference": [-0.5, -0.5],
  "ga": {"population_size": 12, "generations": 5},
  "oracles": [
    {"name": "c", "type": "pwm", "default_weight": 0.0,
     "weights": {"0": {"C": 1}, "1": {"C": 1}, "2": {"C": 1},
                 "3": {"C": 1}, "4": {"C": 1}, "5": {"C": 1}}},
    {"name": "d", "type": "pwm", "default_weight": 0.0,
     "weights": {"0": {"D": 1}, "1": {"D": 1}, "2": {"D": 1},
                 "3": {"D": 1}, "4": {"D": 1}, "5": {"D": 1}}}
  ]
}
)");
}

}  // namespace

TEST_CASE("run executes and writes the full artifact set") {
    write_config();
    const CmdResult r = run_cmd("run -c cli_config.json -o cli_run --entropy-window 10");
    CHECK(r.exit_code == 0);
    for (const std::string f : {"config.snapshot", "runlog.csv", "front.csv", "hv_trace.csv",
                                "entropy_trace.csv", "diagnostics.csv"})
        CHECK(fs::exists("cli_run/" + f));
    const std::string runlog = slurp("cli_run/runlog.csv");
    CHECK(line_count(runlog) == 31);  // header + 30 evaluations
    CHECK(runlog.rfind("call_index,sequence,phase,score_1,score_2", 0) == 0);
}

TEST_CASE("run honors --set overrides") {
    write_config();
    const CmdResult r =
        run_cmd("run -c cli_config.json -o cli_run_override -s budget=15 -s n_init=5");
    CHECK(r.exit_code == 0);
    CHECK(line_count(slurp("cli_run_override/runlog.csv")) == 16);
}

TEST_CASE("zero budget is a no-op with its own exit code") {
    write_config();
    const CmdResult r = run_cmd("run -c cli_config.json -o cli_run_zero -s budget=0");
    CHECK(r.exit_code == 4);
    CHECK(!fs::exists("cli_run_zero/runlog.csv"));
}

TEST_CASE("config errors exit with code 2") {
    write_config();
    CHECK(run_cmd("run -c no_such_config.json -o cli_x").exit_code == 2);
    CHECK(run_cmd("run -c cli_config.json -o cli_x -s method=annealing").exit_code == 2);
    CHECK(run_cmd("run -c cli_config.json -o cli_x -s budget=-3").exit_code == 2);
}

TEST_CASE("oracle failures exit with code 3") {
    write_space();
    atomic_write_file("cli_bad_oracle.json", R"({
  "space_file": "cli_space.txt",
  "budget": 10, "n_init": 5, "reference": [-0.5],
  "oracles": [{"name": "x", "kind": "external",
               "command": ["./no_such_oracle_binary"], "startup_timeout_s": 2}]
}
)");
    const CmdResult r = run_cmd("run -c cli_bad_oracle.json -o cli_run_bad");
    CHECK(r.exit_code == 3);
}

TEST_CASE("enumerate produces the ground-truth artifacts") {
    write_config();
    const CmdResult r = run_cmd("enumerate -c cli_config.json -o cli_enum");
    CHECK(r.exit_code == 0);
    // 1 + 6*2 + C(6,2)*4 = 73 liability-clean sequences within 2 mutations
    CHECK(slurp("cli_enum/space_count.txt") == "73\n");
    const double hv = std::stod(slurp("cli_enum/ground_truth_hv.txt"));
    // best achievable: (2,0) and (0,2) plus (1,1): union of boxes over ref (-.5,-.5)
    CHECK(hv == doctest::Approx(2.5 * 2.5 - 2 * (1.5 * 1.0)).epsilon(1e-12));
    const std::string front = slurp("cli_enum/ground_truth_front.csv");
    CHECK(front.rfind("sequence,mutation_count,score_1,score_2", 0) == 0);
    // every sequence with c + d = 2 is non-dominated: 15 + 30 + 15 members
    CHECK(line_count(front) == 61);
}

TEST_CASE("enumerate without a fixed reference is a config error") {
    write_config();
    CHECK(run_cmd("enumerate -c cli_config.json -o cli_enum2 -s reference=auto").exit_code ==
          2);
}

TEST_CASE("enumerate past the cap reports the space exit code") {
    write_config();
    CHECK(run_cmd("enumerate -c cli_config.json -o cli_enum3 -s enumerate_cap=10").exit_code ==
          5);
}

TEST_CASE("benchmark aggregates methods across seeds") {
    write_config();
    const CmdResult r = run_cmd(
        "benchmark -c cli_config.json -o cli_bench --entropy-window 10 "
        "-s benchmark.methods=[\\\"random\\\",\\\"nsga2\\\"] -s benchmark.seeds=[1,2] "
        "-s benchmark.ground_truth=true -s budget=25 -s n_init=8");
    CHECK(r.exit_code == 0);
    for (const std::string d :
         {"random-seed1", "random-seed2", "nsga2-seed1", "nsga2-seed2"})
        CHECK(fs::exists("cli_bench/" + d + "/runlog.csv"));
    CHECK(fs::exists("cli_bench/hv_mean_se.csv"));
    CHECK(fs::exists("cli_bench/entropy_hv_scatter.csv"));
    const std::string summary = slurp("cli_bench/summary.txt");
    CHECK(summary.find("ground_truth_hv:") != std::string::npos);
    CHECK(summary.find("fraction_of_ground_truth") != std::string::npos);
    CHECK(line_count(slurp("cli_bench/entropy_hv_scatter.csv")) == 5);  // header + 4 runs
}

TEST_CASE("benchmark without methods or seeds is a config error") {
    write_config();
    CHECK(run_cmd("benchmark -c cli_config.json -o cli_bench2").exit_code == 2);
}

TEST_CASE("report regenerates derived files from the runlog") {
    write_config();
    REQUIRE(run_cmd("run -c cli_config.json -o cli_report --entropy-window 10").exit_code ==
            0);
    const std::string before = slurp("cli_report/hv_trace.csv");
    fs::remove("cli_report/hv_trace.csv");
    fs::remove("cli_report/front.csv");
    const CmdResult r = run_cmd("report -r cli_report --entropy-window 10");
    CHECK(r.exit_code == 0);
    CHECK(slurp("cli_report/hv_trace.csv") == before);
    CHECK(fs::exists("cli_report/front.csv"));
}

TEST_CASE("oracle-check passes a conforming oracle and fails a broken one") {
    const std::string oracle = LEN_ORACLE_PATH;
    const CmdResult ok = run_cmd("oracle-check --command " + oracle);
    CHECK(ok.exit_code == 0);
    CHECK(ok.output.find("PASS handshake") != std::string::npos);
    CHECK(ok.output.find("PASS alignment") != std::string::npos);
    CHECK(ok.output.find("PASS determinism") != std::string::npos);

    // flags for the child process are appended with repeated --command
    const CmdResult bad =
        run_cmd("oracle-check --command " + oracle + " --command=--nondeterministic");
    CHECK(bad.exit_code == 3);
    CHECK(bad.output.find("FAIL determinism") != std::string::npos);

    const CmdResult silent = run_cmd("oracle-check --timeout 0.3 --command " + oracle +
                                     " --command=--silent");
    CHECK(silent.exit_code == 3);
    CHECK(silent.output.find("FAIL handshake") != std::string::npos);
}

TEST_CASE("external oracle integrates into a full run") {
    write_space();
    // length objective is constant on this space, so pair it with a PWM
    std::ostringstream cfg;
    cfg << R"({
  "space_file": "cli_space.txt",
  "budget": 16, "n_init": 6, "seed": 1, "reference": [-0.5, 5.0],
  "ga": {"population_size": 8, "generations": 3},
  "oracles": [
    {"name": "c", "type": "pwm", "default_weight": 0.0, "weights": {"0": {"C": 1}}},
    {"name": "len", "kind": "external", "command": [")"
        << LEN_ORACLE_PATH << R"("]}
  ]
}
)";
    atomic_write_file("cli_ext_config.json", cfg.str());
    const CmdResult r = run_cmd("run -c cli_ext_config.json -o cli_run_ext");
    CHECK(r.exit_code == 0);
    const std::string runlog = slurp("cli_run_ext/runlog.csv");
    CHECK(line_count(runlog) == 17);
    CHECK(runlog.find(",6") != std::string::npos);  // every length score is 6
}
