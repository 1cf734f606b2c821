// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "boat/common.hpp"
#include "boat/sequence.hpp"

namespace boat {

// All objectives use the maximization convention; minimized raw scores are
// negated at the oracle boundary.
using ScoreVector = Eigen::VectorXd;

// a dominates b iff a >= b componentwise and a != b
bool dominates(const ScoreVector& a, const ScoreVector& b);

// Rank partition: fronts[0] is the non-dominated set, fronts[i+1] is
// non-dominated after removing fronts[0..i]. Entries are input indices,
// stable within each front.
std::vector<std::vector<int>> non_dominated_sort(const std::vector<ScoreVector>& points);

// NSGA-II crowding distance over a mutually non-dominated front. Boundary
// points per objective get +infinity.
std::vector<double> crowding_distance(const std::vector<ScoreVector>& front);

// Exact hypervolume for 1-4 objectives: Lebesgue measure of the union of
// boxes [ref, p]. Points with any coordinate <= ref are ignored.
double hypervolume(const std::vector<ScoreVector>& points, const ScoreVector& ref);

// Per objective: min of the initial scores minus 10% of its magnitude
// (-0.1 when the minimum is exactly zero).
ScoreVector default_reference(const std::vector<ScoreVector>& initial_scores);

struct FrontEntry {
    std::int64_t id;
    ScoreVector score;
};

/// Incrementally maintained non-dominated set with cached hypervolume.
class ParetoState {
public:
    ParetoState() = default;
    explicit ParetoState(ScoreVector reference) : ref_(std::move(reference)) {}

    // Inserts if non-dominated, evicting newly dominated members.
    // Returns the hypervolume delta (>= 0).
    double update(std::int64_t id, const ScoreVector& score);

    const std::vector<FrontEntry>& front() const { return front_; }
    const ScoreVector& reference() const { return ref_; }
    double hv() const { return hv_; }

private:
    std::vector<FrontEntry> front_;
    ScoreVector ref_;
    double hv_ = 0.0;
};

// Mean over positions of the per-position Shannon entropy of the letter
// distribution (natural log by default).
double shannon_entropy(const std::vector<Sequence>& sequences, double log_base = 0.0);

}  // namespace boat
