// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "boat/common.hpp"
#include "boat/pareto.hpp"
#include "boat/sequence.hpp"

namespace boat {

enum class Direction { maximize, minimize };

/// A single black-box scorer: one real value per sequence. Scores are raw
/// (pre-negation); the bank applies the maximization convention.
class Oracle {
public:
    Oracle(std::string name, Direction direction)
        : name_(std::move(name)), direction_(direction) {}
    virtual ~Oracle() = default;

    virtual std::vector<double> score(const std::vector<Sequence>& seqs) = 0;
    virtual bool external() const { return false; }

    const std::string& name() const { return name_; }
    Direction direction() const { return direction_; }

private:
    std::string name_;
    Direction direction_;
};

/// Explicit sequence -> score map; throws on unknown sequences.
class LookupOracle final : public Oracle {
public:
    LookupOracle(std::string name, Direction dir, std::map<std::string, double> table)
        : Oracle(std::move(name), dir), table_(std::move(table)) {}
    std::vector<double> score(const std::vector<Sequence>& seqs) override;

private:
    std::map<std::string, double> table_;
};

// Separable position-weight-matrix score over the full sequence length.
double pwm_score(const Sequence& s, const std::vector<std::unordered_map<char, double>>& weights);

class PwmOracle final : public Oracle {
public:
    PwmOracle(std::string name, Direction dir,
              std::vector<std::unordered_map<char, double>> weights)
        : Oracle(std::move(name), dir), weights_(std::move(weights)) {}
    std::vector<double> score(const std::vector<Sequence>& seqs) override;

private:
    std::vector<std::unordered_map<char, double>> weights_;
};

/// score = -Hamming distance to a target sequence.
class MotifDistanceOracle final : public Oracle {
public:
    MotifDistanceOracle(std::string name, Direction dir, Sequence target)
        : Oracle(std::move(name), dir), target_(std::move(target)) {}
    std::vector<double> score(const std::vector<Sequence>& seqs) override;

private:
    Sequence target_;
};

/// Child process speaking the line-delimited JSON protocol over stdin/stdout:
/// hello handshake, batched score requests (<= 64 sequences each), bye.
class ExternalOracle final : public Oracle {
public:
    struct Options {
        std::vector<std::string> command;  // argv
        std::string workdir;               // empty = inherit
        double startup_timeout_s = 10.0;
        double request_timeout_s = 600.0;
    };

    static std::unique_ptr<ExternalOracle> spawn(const Options& opts);
    ~ExternalOracle() override;

    std::vector<double> score(const std::vector<Sequence>& seqs) override;
    bool external() const override { return true; }

    static constexpr int kMaxBatch = 64;

private:
    ExternalOracle(std::string name, Direction dir) : Oracle(std::move(name), dir) {}
    void send_line(const std::string& line);
    std::string read_line(double timeout_s);
    void shutdown() noexcept;

    int pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    std::string rx_buffer_;
    Options opts_;
    std::int64_t next_id_ = 0;
};

struct OracleCall {
    int index = 0;  // 0-based call order
    Sequence sequence;
    ScoreVector scores;      // maximization convention
    Eigen::VectorXd raw;     // as returned by the oracles
    std::string phase;       // init | bo | baseline
    double wall_seconds = 0.0;
};

/// Scoring boundary with exact-match cache and strict per-sequence budget.
/// One budget unit = one novel sequence scored on all objectives.
class OracleBank {
public:
    OracleBank(std::vector<std::unique_ptr<Oracle>> oracles, int budget);

    int objectives() const { return static_cast<int>(oracles_.size()); }
    int budget_remaining() const { return budget_; }
    int initial_budget() const { return initial_budget_; }
    int calls_made() const { return static_cast<int>(log_.size()); }
    bool has_external() const;

    void set_phase(std::string phase) { phase_ = std::move(phase); }

    // All-or-nothing: throws BudgetExhausted before any oracle I/O when the
    // novel-sequence count exceeds the remaining budget.
    std::vector<ScoreVector> score(const std::vector<Sequence>& seqs);

    std::optional<ScoreVector> cached(const Sequence& s) const;
    const std::vector<OracleCall>& call_log() const { return log_; }
    const std::vector<std::unique_ptr<Oracle>>& oracles() const { return oracles_; }

    // Cache persistence so interrupted runs resume without re-spending budget.
    void save_cache(const std::string& path) const;
    int load_cache(const std::string& path);  // returns entries restored

private:
    std::vector<std::unique_ptr<Oracle>> oracles_;
    std::unordered_map<Sequence, ScoreVector> cache_;
    int initial_budget_ = 0;
    int budget_ = 0;
    std::string phase_ = "init";
    std::vector<OracleCall> log_;
};

struct GroundTruth {
    ParetoState front;
    std::unordered_map<std::int64_t, Sequence> front_sequences;  // id -> member
    double count = 0.0;  // liability-clean sequences enumerated
};

// Enumerates the whole space and streams it through a Pareto archive.
// External oracles are refused unless allow_external (cost guard).
GroundTruth brute_force_front(const MutationSpace& space,
                              const std::vector<std::unique_ptr<Oracle>>& oracles,
                              const ScoreVector& ref, double cap = 1e8,
                              bool allow_external = false);

}  // namespace boat
