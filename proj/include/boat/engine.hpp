// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "boat/evolve.hpp"
#include "boat/oracle.hpp"
#include "boat/pareto.hpp"
#include "boat/sequence.hpp"
#include "boat/surrogate.hpp"

namespace boat {

enum class Method {
    boat_ehvi,
    boat_qehvi,
    boat_qnehvi,
    boat_logei,
    ga_sum,
    nsga2,
    random_search,
};

Method parse_method(const std::string& name);
std::string method_name(Method m);
bool is_boat_method(Method m);
// Sequential methods (everything except boat-qehvi / boat-qnehvi) force q=1.
bool is_batch_method(Method m);

struct EngineConfig {
    Method method = Method::boat_ehvi;
    int q = 4;
    int budget = 1000;
    int n_init = 100;
    int init_max_mut = 2;
    std::string encoder = "onehot";
    std::string external_embedding_file;
    GaConfig ga;
    int mc_samples = 128;
    std::optional<ScoreVector> reference;  // nullopt = default_reference rule
    std::uint64_t seed = 0;
    bool count_init_in_budget = true;
    // acquisition GA seed pool: front members sampled with this weight
    int front_seed_weight = 3;
    // hyperparameter search runs every iteration up to this many training
    // points, then every hyperopt_interval iterations (warm-started between)
    int hyperopt_small_n = 300;
    int hyperopt_interval = 10;

    int total_budget() const { return count_init_in_budget ? budget : budget + n_init; }
};

struct IterationDiagnostics {
    int iteration = 0;
    int oracle_calls = 0;  // cumulative, after this iteration's scoring
    std::vector<GpHyperparams> hyperparams;
    std::vector<double> lml;
    double acq_value = 0.0;
    double ga_seconds = 0.0;
};

struct RunLog {
    std::string method;
    std::uint64_t seed = 0;
    int n_init = 0;
    int q = 1;
    ScoreVector reference;
    std::vector<OracleCall> evaluations;
    std::vector<IterationDiagnostics> diagnostics;
};

// Executes one full run against the bank (whose budget must equal
// config.total_budget()). The bank's call log becomes the RunLog.
RunLog run(const EngineConfig& config, const MutationSpace& space, OracleBank& bank);

struct TracePoint {
    int oracle_calls = 0;
    int iteration = 0;
    double hv = 0.0;
};
// Replays the evaluations through a Pareto archive with a fixed reference.
std::vector<TracePoint> hv_trace(const RunLog& log, const ScoreVector& ref);

struct EntropyPoint {
    int oracle_calls = 0;
    double cumulative = 0.0;
    double windowed = 0.0;
};
std::vector<EntropyPoint> entropy_trace(const RunLog& log, int window = 100);

// Current non-dominated set over all evaluations (ids = call indices).
ParetoState final_front(const RunLog& log, const ScoreVector& ref);

// ------------------------------------------------------------- reporting

// Writes config.snapshot, runlog.csv, front.csv, hv_trace.csv,
// entropy_trace.csv, diagnostics.csv into `dir` (created if needed).
void write_run_dir(const std::string& dir, const RunLog& log, const MutationSpace& space,
                   const std::string& config_snapshot, int entropy_window = 100);

// Reads evaluations back from a runlog.csv (report regeneration path).
RunLog read_runlog_csv(const std::string& path, const ScoreVector& ref);

struct MeanSeries {
    std::vector<int> oracle_calls;
    std::vector<double> mean;
    std::vector<double> se;  // sample std / sqrt(n)
};
// Aligns per-seed HV traces on oracle-call count and aggregates.
MeanSeries aggregate_hv(const std::vector<std::vector<TracePoint>>& traces);

}  // namespace boat
