// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "boat/engine.hpp"
#include "boat/oracle.hpp"
#include "boat/sequence.hpp"

namespace boat {

struct BenchmarkConfig {
    std::vector<std::string> methods;
    std::vector<std::uint64_t> seeds;
    bool ground_truth = false;  // enumerate the space and report HV fractions
};

/// A fully validated run configuration. Oracles are constructed on demand so
/// each benchmark run gets fresh (external) oracle processes and caches.
class LoadedConfig {
public:
    // Strict parse: unknown keys anywhere are a ConfigError naming the key.
    // Overrides are dotted key=value pairs (values parsed as JSON when
    // possible, e.g. `budget=200`, `ga.mutation_prob=0.15`, `method=nsga2`).
    static LoadedConfig load(const std::string& path,
                             const std::vector<std::string>& overrides = {});
    // Same, from a JSON string (tests).
    static LoadedConfig parse(const std::string& text, const std::string& base_dir = ".",
                              const std::vector<std::string>& overrides = {});

    const std::string& snapshot() const { return snapshot_; }
    const MutationSpace& space() const { return space_; }
    const EngineConfig& engine() const { return engine_; }
    const BenchmarkConfig& benchmark() const { return benchmark_; }
    int enumerate_cap() const { return enumerate_cap_; }

    std::vector<std::unique_ptr<Oracle>> make_oracles() const;
    OracleBank make_bank() const { return OracleBank(make_oracles(), engine_.total_budget()); }

private:
    std::string snapshot_;
    std::string oracles_json_;  // serialized oracle spec list
    std::string base_dir_;
    MutationSpace space_;
    EngineConfig engine_;
    BenchmarkConfig benchmark_;
    int enumerate_cap_ = 100000000;
};

}  // namespace boat
