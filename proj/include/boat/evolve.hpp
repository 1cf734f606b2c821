// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <vector>

#include "boat/common.hpp"
#include "boat/oracle.hpp"
#include "boat/sequence.hpp"

namespace boat {

struct GaConfig {
    int population_size = 50;
    int generations = 20;
    int tournament_size = 3;
    double crossover_rate = 0.7;
    double mutation_prob = 0.1;
    double batch_crossover_rate = 0.7;
    // "slightly mutating the previously evaluated sequences" when seeding
    double init_perturb_prob = 0.05;
    int elites = 1;
    // baselines only: stop after this many consecutive generations without a
    // single novel oracle evaluation (small spaces exhaust before the budget)
    int stall_generations = 200;
};

// Fitness of a whole population at once; batching lets acquisition
// evaluations share one kernel/whitening pass.
using PopulationFitness =
    std::function<std::vector<double>(const std::vector<std::vector<Sequence>>&)>;

struct GaResult {
    std::vector<Sequence> best;  // q members
    double best_fitness = 0.0;
    std::vector<std::vector<Sequence>> final_population;
};

/// GA over batches of q sequences (q=1 degenerates to a plain sequence GA):
/// tournament selection, per-member single-point crossover at crossover_rate,
/// member swaps between parental batches at batch_crossover_rate, per-member
/// mutation, elitism. Returns the best individual ever evaluated.
GaResult ga_batch_optimize(const PopulationFitness& fitness, const MutationSpace& space,
                           const GaConfig& cfg, int q, const std::vector<Sequence>& seed_pool,
                           Rng& rng);

GaResult ga_optimize(const std::function<double(const Sequence&)>& fitness,
                     const MutationSpace& space, const GaConfig& cfg,
                     const std::vector<Sequence>& seed_pool, Rng& rng);

/// Single-population GA directly against the oracles with fitness
/// sum_d (y_d - min_d)/(max_d - min_d), min/max maintained as running
/// statistics over all evaluations. Runs until the bank budget is exhausted;
/// every evaluation is recorded in the bank's call log.
void ga_sum_baseline(OracleBank& bank, const MutationSpace& space, const GaConfig& cfg,
                     int init_max_mut, Rng& rng);

/// Standard NSGA-II (fast non-dominated sort + crowding distance) with this
/// module's variation operators, until the bank budget is exhausted.
void nsga2(OracleBank& bank, const MutationSpace& space, const GaConfig& cfg,
           int init_max_mut, Rng& rng);

}  // namespace boat
