// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "boat/config.hpp"
#include "boat/engine.hpp"
#include "boat/oracle.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitOracle = 3;
constexpr int kExitNoop = 4;
constexpr int kExitSpace = 5;

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

int classify(const boat::BoatError& e) {
    using namespace boat;
    if (dynamic_cast<const SpaceTooLarge*>(&e)) return kExitSpace;
    if (dynamic_cast<const OracleFailure*>(&e) || dynamic_cast<const SpawnFailure*>(&e) ||
        dynamic_cast<const HandshakeTimeout*>(&e) ||
        dynamic_cast<const ProtocolViolation*>(&e) ||
        dynamic_cast<const ExternalOracleRefused*>(&e))
        return kExitOracle;
    return kExitConfig;
}

int cmd_run(const std::string& config_path, const std::vector<std::string>& overrides,
            const std::string& out_dir, int entropy_window) {
    const auto cfg = boat::LoadedConfig::load(config_path, overrides);
    if (cfg.engine().budget == 0) {
        std::cerr << "budget is zero; nothing to do\n";
        return kExitNoop;
    }
    boat::OracleBank bank = cfg.make_bank();
    const boat::RunLog log = boat::run(cfg.engine(), cfg.space(), bank);
    boat::write_run_dir(out_dir, log, cfg.space(), cfg.snapshot(), entropy_window);
    std::cerr << "wrote " << out_dir << " (" << log.evaluations.size() << " oracle calls)\n";
    return kExitOk;
}

int cmd_enumerate(const std::string& config_path, const std::vector<std::string>& overrides,
                  const std::string& out_dir) {
    const auto cfg = boat::LoadedConfig::load(config_path, overrides);
    const auto oracles = cfg.make_oracles();
    boat::ScoreVector ref;
    if (cfg.engine().reference) {
        ref = *cfg.engine().reference;
    } else {
        throw boat::ConfigError("enumerate needs a fixed reference vector in the config");
    }
    const boat::GroundTruth gt =
        boat::brute_force_front(cfg.space(), oracles, ref, cfg.enumerate_cap());

    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const int k = static_cast<int>(ref.size());
    std::vector<boat::FrontEntry> members = gt.front.front();
    std::sort(members.begin(), members.end(),
              [](const auto& a, const auto& b) { return a.id < b.id; });
    std::ostringstream os;
    os << "sequence,mutation_count";
    for (int j = 1; j <= k; ++j) os << ",score_" << j;
    os << '\n';
    for (const auto& m : members) {
        const auto it = gt.front_sequences.find(m.id);
        if (it == gt.front_sequences.end()) continue;
        os << it->second.str() << ',' << boat::mutation_count(it->second, cfg.space());
        for (Eigen::Index j = 0; j < m.score.size(); ++j) os << ',' << fmt(m.score[j]);
        os << '\n';
    }
    boat::atomic_write_file(out_dir + "/ground_truth_front.csv", os.str());
    boat::atomic_write_file(out_dir + "/ground_truth_hv.txt", fmt(gt.front.hv()) + "\n");
    boat::atomic_write_file(out_dir + "/space_count.txt",
                            std::to_string(static_cast<long long>(gt.count)) + "\n");
    std::cerr << "enumerated " << static_cast<long long>(gt.count) << " sequences, HV "
              << gt.front.hv() << "\n";
    return kExitOk;
}

int cmd_benchmark(const std::string& config_path, const std::vector<std::string>& overrides,
                  const std::string& out_dir, int entropy_window) {
    const auto cfg = boat::LoadedConfig::load(config_path, overrides);
    const auto& bench = cfg.benchmark();
    if (bench.methods.empty() || bench.seeds.empty())
        throw boat::ConfigError("benchmark needs benchmark.methods and benchmark.seeds");

    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    std::optional<boat::ScoreVector> shared_ref = cfg.engine().reference;
    struct RunOutcome {
        std::string method;
        std::uint64_t seed;
        double final_hv = 0.0;
        double final_entropy = 0.0;
    };
    std::vector<RunOutcome> outcomes;
    std::map<std::string, std::vector<std::vector<boat::TracePoint>>> traces;

    for (const auto& method : bench.methods)
        for (const auto seed : bench.seeds) {
            boat::EngineConfig ecfg = cfg.engine();
            ecfg.method = boat::parse_method(method);
            ecfg.seed = seed;
            boat::OracleBank bank(cfg.make_oracles(), ecfg.total_budget());
            const boat::RunLog log = boat::run(ecfg, cfg.space(), bank);
            if (!shared_ref) shared_ref = log.reference;  // comparability rule

            const std::string run_dir =
                out_dir + "/" + method + "-seed" + std::to_string(seed);
            boat::write_run_dir(run_dir, log, cfg.space(), cfg.snapshot(), entropy_window);

            const auto trace = boat::hv_trace(log, *shared_ref);
            traces[method].push_back(trace);
            RunOutcome oc;
            oc.method = method;
            oc.seed = seed;
            oc.final_hv = trace.empty() ? 0.0 : trace.back().hv;
            const auto ent = boat::entropy_trace(log, entropy_window);
            oc.final_entropy = ent.empty() ? 0.0 : ent.back().cumulative;
            outcomes.push_back(oc);
            std::cerr << method << " seed " << seed << ": final HV " << oc.final_hv << "\n";
        }

    double gt_hv = 0.0;
    bool have_gt = false;
    if (bench.ground_truth) {
        const auto oracles = cfg.make_oracles();
        const auto gt =
            boat::brute_force_front(cfg.space(), oracles, *shared_ref, cfg.enumerate_cap());
        gt_hv = gt.front.hv();
        have_gt = true;
    }

    {
        std::ostringstream os;
        os << "method,oracle_calls,mean_hv,se_hv\n";
        for (const auto& [method, mt] : traces) {
            const auto agg = boat::aggregate_hv(mt);
            for (std::size_t i = 0; i < agg.oracle_calls.size(); ++i)
                os << method << ',' << agg.oracle_calls[i] << ',' << fmt(agg.mean[i]) << ','
                   << fmt(agg.se[i]) << '\n';
        }
        boat::atomic_write_file(out_dir + "/hv_mean_se.csv", os.str());
    }
    {
        std::ostringstream os;
        os << "method,seed,final_entropy,final_hv\n";
        for (const auto& oc : outcomes)
            os << oc.method << ',' << oc.seed << ',' << fmt(oc.final_entropy) << ','
               << fmt(oc.final_hv) << '\n';
        boat::atomic_write_file(out_dir + "/entropy_hv_scatter.csv", os.str());
    }
    {
        std::ostringstream os;
        os << "reference:";
        for (Eigen::Index j = 0; j < shared_ref->size(); ++j) os << ' ' << (*shared_ref)[j];
        os << "\n";
        if (have_gt) os << "ground_truth_hv: " << fmt(gt_hv) << "\n";
        for (const auto& [method, mt] : traces) {
            double sum = 0.0;
            for (const auto& t : mt) sum += t.empty() ? 0.0 : t.back().hv;
            const double mean = sum / static_cast<double>(mt.size());
            os << method << ": final_hv_mean " << fmt(mean);
            if (have_gt && gt_hv > 0.0) os << " fraction_of_ground_truth " << fmt(mean / gt_hv);
            os << "\n";
        }
        boat::atomic_write_file(out_dir + "/summary.txt", os.str());
    }
    return kExitOk;
}

int cmd_report(const std::string& run_dir, const std::string& config_path,
               int entropy_window) {
    const std::string cfg_path =
        config_path.empty() ? run_dir + "/config.snapshot" : config_path;
    const auto cfg = boat::LoadedConfig::load(cfg_path);
    boat::RunLog log = boat::read_runlog_csv(
        run_dir + "/runlog.csv",
        cfg.engine().reference ? *cfg.engine().reference : boat::ScoreVector());
    if (!cfg.engine().reference) {
        std::vector<boat::ScoreVector> init_scores;
        const std::size_t n =
            std::min<std::size_t>(log.evaluations.size(), cfg.engine().n_init);
        for (std::size_t i = 0; i < n; ++i) init_scores.push_back(log.evaluations[i].scores);
        log.reference = boat::default_reference(init_scores);
    }
    log.q = boat::is_batch_method(cfg.engine().method) ? cfg.engine().q : 1;
    log.n_init = cfg.engine().n_init;
    boat::write_run_dir(run_dir, log, cfg.space(), cfg.snapshot(), entropy_window);
    std::cerr << "regenerated reports in " << run_dir << "\n";
    return kExitOk;
}

int cmd_oracle_check(const std::vector<std::string>& command, const std::string& workdir,
                     double timeout) {
    boat::ExternalOracle::Options opts;
    opts.command = command;
    opts.workdir = workdir;
    opts.startup_timeout_s = timeout;

    int failures = 0;
    auto report = [&](const std::string& check, bool ok, const std::string& detail = "") {
        std::cout << (ok ? "PASS" : "FAIL") << " " << check;
        if (!detail.empty()) std::cout << " (" << detail << ")";
        std::cout << "\n";
        if (!ok) ++failures;
    };

    std::unique_ptr<boat::ExternalOracle> oracle;
    try {
        oracle = boat::ExternalOracle::spawn(opts);
        report("handshake", true, "name '" + oracle->name() + "'");
    } catch (const boat::BoatError& e) {
        report("handshake", false, e.what());
        return kExitOracle;
    }

    std::vector<boat::Sequence> canned;
    for (const char* s : {"ACDEFGHIKL", "MNPQRSTVWY", "AAAAAAAAAA", "ACACACACAC"})
        canned.push_back(boat::Sequence::validate(s, 10));

    std::vector<double> first, second;
    try {
        const auto t0 = std::chrono::steady_clock::now();
        first = oracle->score(canned);
        const double dt =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        report("alignment", first.size() == canned.size());
        report("latency", true, fmt(dt) + " s for " + std::to_string(canned.size()));
    } catch (const boat::BoatError& e) {
        report("alignment", false, e.what());
        return kExitOracle;
    }
    try {
        second = oracle->score(canned);
        bool same = first == second;
        std::string detail;
        if (!same) {
            std::ostringstream os;
            os << "first [";
            for (double v : first) os << ' ' << v;
            os << " ] second [";
            for (double v : second) os << ' ' << v;
            os << " ]";
            detail = os.str();
        }
        report("determinism", same, detail);
    } catch (const boat::BoatError& e) {
        report("determinism", false, e.what());
    }
    return failures == 0 ? kExitOk : kExitOracle;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-objective Bayesian optimization for discrete sequences"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "boat_out", run_dir, workdir;
    std::vector<std::string> overrides, command;
    int entropy_window = 100;
    double timeout = 10.0;

    auto* run = app.add_subcommand("run", "Execute a single optimization run");
    run->add_option("--config,-c", config_path, "Config file")->required();
    run->add_option("--out,-o", out_dir, "Run directory");
    run->add_option("--set,-s", overrides, "Overrides as dotted key=value");
    run->add_option("--entropy-window", entropy_window, "Entropy checkpoint interval");

    auto* bench = app.add_subcommand("benchmark", "Run methods x seeds and aggregate");
    bench->add_option("--config,-c", config_path, "Config file")->required();
    bench->add_option("--out,-o", out_dir, "Output directory");
    bench->add_option("--set,-s", overrides, "Overrides as dotted key=value");
    bench->add_option("--entropy-window", entropy_window, "Entropy checkpoint interval");

    auto* enumerate = app.add_subcommand("enumerate", "Brute-force the ground-truth front");
    enumerate->add_option("--config,-c", config_path, "Config file")->required();
    enumerate->add_option("--out,-o", out_dir, "Output directory");
    enumerate->add_option("--set,-s", overrides, "Overrides as dotted key=value");

    auto* report = app.add_subcommand("report", "Regenerate derived CSVs from runlog.csv");
    report->add_option("--run-dir,-r", run_dir, "Run directory")->required();
    report->add_option("--config,-c", config_path, "Config override (default: snapshot)");
    report->add_option("--entropy-window", entropy_window, "Entropy checkpoint interval");

    auto* check = app.add_subcommand("oracle-check", "Protocol conformance check");
    check->add_option("--command", command, "Oracle command line")->required();
    check->add_option("--workdir", workdir, "Oracle working directory");
    check->add_option("--timeout", timeout, "Handshake timeout in seconds");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path, overrides, out_dir, entropy_window);
        if (bench->parsed())
            return cmd_benchmark(config_path, overrides, out_dir, entropy_window);
        if (enumerate->parsed()) return cmd_enumerate(config_path, overrides, out_dir);
        if (report->parsed()) return cmd_report(run_dir, config_path, entropy_window);
        if (check->parsed()) return cmd_oracle_check(command, workdir, timeout);
    } catch (const boat::BoatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return classify(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitConfig;
}
