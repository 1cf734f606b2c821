// SPDX-License-Identifier: Apache-2.0
#include "boat/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "boat/pareto.hpp"

namespace boat {

namespace {

int tournament(const std::vector<double>& fitness, int size, Rng& rng) {
    std::uniform_int_distribution<int> pick(0, static_cast<int>(fitness.size()) - 1);
    int best = pick(rng);
    for (int i = 1; i < size; ++i) {
        const int c = pick(rng);
        if (fitness[c] > fitness[best]) best = c;
    }
    return best;
}

std::vector<int> sorted_by_fitness_desc(const std::vector<double>& fitness) {
    std::vector<int> order(fitness.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return fitness[a] > fitness[b]; });
    return order;
}

}  // namespace

GaResult ga_batch_optimize(const PopulationFitness& fitness, const MutationSpace& space,
                           const GaConfig& cfg, int q, const std::vector<Sequence>& seed_pool,
                           Rng& rng) {
    if (seed_pool.empty()) throw ConfigError("GA seed pool is empty");
    if (q < 1 || cfg.population_size < 1 || cfg.tournament_size < 1)
        throw ConfigError("invalid GA configuration");

    using Individual = std::vector<Sequence>;
    std::uniform_int_distribution<int> pick_seed(0, static_cast<int>(seed_pool.size()) - 1);
    std::bernoulli_distribution do_crossover(cfg.crossover_rate);
    std::bernoulli_distribution do_swap(cfg.batch_crossover_rate);

    std::vector<Individual> pop(cfg.population_size);
    for (auto& ind : pop) {
        ind.reserve(q);
        for (int i = 0; i < q; ++i)
            ind.push_back(mutate(seed_pool[pick_seed(rng)], space, cfg.init_perturb_prob, rng));
    }
    std::vector<double> fit = fitness(pop);

    GaResult result;
    result.best_fitness = -std::numeric_limits<double>::infinity();
    auto track_best = [&] {
        for (std::size_t i = 0; i < pop.size(); ++i)
            if (fit[i] > result.best_fitness) {
                result.best_fitness = fit[i];
                result.best = pop[i];
            }
    };
    track_best();

    for (int gen = 0; gen < cfg.generations; ++gen) {
        std::vector<Individual> next;
        next.reserve(cfg.population_size);
        const auto order = sorted_by_fitness_desc(fit);
        for (int e = 0; e < cfg.elites && e < cfg.population_size; ++e)
            next.push_back(pop[order[e]]);

        while (static_cast<int>(next.size()) < cfg.population_size) {
            Individual a = pop[tournament(fit, cfg.tournament_size, rng)];
            Individual b = pop[tournament(fit, cfg.tournament_size, rng)];
            for (int i = 0; i < q; ++i) {
                if (do_crossover(rng))
                    std::tie(a[i], b[i]) = single_point_crossover(a[i], b[i], space, rng);
                if (q > 1 && do_swap(rng)) std::swap(a[i], b[i]);
            }
            for (int i = 0; i < q; ++i) {
                a[i] = mutate(a[i], space, cfg.mutation_prob, rng);
                b[i] = mutate(b[i], space, cfg.mutation_prob, rng);
            }
            next.push_back(std::move(a));
            if (static_cast<int>(next.size()) < cfg.population_size)
                next.push_back(std::move(b));
        }
        pop = std::move(next);
        fit = fitness(pop);
        track_best();
    }
    result.final_population = std::move(pop);
    return result;
}

GaResult ga_optimize(const std::function<double(const Sequence&)>& fitness,
                     const MutationSpace& space, const GaConfig& cfg,
                     const std::vector<Sequence>& seed_pool, Rng& rng) {
    PopulationFitness pop_fitness =
        [&](const std::vector<std::vector<Sequence>>& pop) {
            std::vector<double> out;
            out.reserve(pop.size());
            for (const auto& ind : pop) out.push_back(fitness(ind.front()));
            return out;
        };
    return ga_batch_optimize(pop_fitness, space, cfg, 1, seed_pool, rng);
}

namespace {

// Scores as many of `seqs` as the remaining budget allows (dropping the
// overflow) and reports whether any novel sequence was evaluated.
bool score_within_budget(OracleBank& bank, std::vector<Sequence>& seqs) {
    std::vector<Sequence> keep;
    keep.reserve(seqs.size());
    std::unordered_set<Sequence> pending_novel;
    for (const auto& s : seqs) {
        const bool novel = !bank.cached(s).has_value() && !pending_novel.count(s);
        if (novel) {
            if (static_cast<int>(pending_novel.size()) >= bank.budget_remaining()) continue;
            pending_novel.insert(s);
        }
        keep.push_back(s);
    }
    seqs = std::move(keep);
    if (!seqs.empty()) bank.score(seqs);
    return !pending_novel.empty();
}

struct RunningMinMax {
    ScoreVector mins, maxs;
    void observe(const ScoreVector& y) {
        if (mins.size() == 0) {
            mins = y;
            maxs = y;
            return;
        }
        mins = mins.cwiseMin(y);
        maxs = maxs.cwiseMax(y);
    }
    double normalized_sum(const ScoreVector& y) const {
        double f = 0.0;
        for (Eigen::Index d = 0; d < y.size(); ++d) {
            const double range = maxs[d] - mins[d];
            if (range > 0.0) f += (y[d] - mins[d]) / range;
        }
        return f;
    }
};

}  // namespace

void ga_sum_baseline(OracleBank& bank, const MutationSpace& space, const GaConfig& cfg,
                     int init_max_mut, Rng& rng) {
    if (bank.budget_remaining() < cfg.population_size)
        throw ConfigError("ga-sum needs budget >= population size");
    bank.set_phase("baseline");

    std::vector<Sequence> pop = sample_initial(space, cfg.population_size, init_max_mut, rng);
    bank.score(pop);
    RunningMinMax stats;
    for (const auto& call : bank.call_log()) stats.observe(call.scores);

    std::bernoulli_distribution do_crossover(cfg.crossover_rate);
    int stalled = 0;
    while (bank.budget_remaining() > 0 && stalled < cfg.stall_generations) {
        std::vector<double> fit(pop.size());
        for (std::size_t i = 0; i < pop.size(); ++i)
            fit[i] = stats.normalized_sum(*bank.cached(pop[i]));

        std::vector<Sequence> next;
        const auto order = sorted_by_fitness_desc(fit);
        for (int e = 0; e < cfg.elites && e < static_cast<int>(pop.size()); ++e)
            next.push_back(pop[order[e]]);

        std::vector<Sequence> offspring;
        while (static_cast<int>(next.size() + offspring.size()) < cfg.population_size) {
            Sequence a = pop[tournament(fit, cfg.tournament_size, rng)];
            Sequence b = pop[tournament(fit, cfg.tournament_size, rng)];
            if (do_crossover(rng)) std::tie(a, b) = single_point_crossover(a, b, space, rng);
            offspring.push_back(mutate(a, space, cfg.mutation_prob, rng));
            if (static_cast<int>(next.size() + offspring.size()) < cfg.population_size)
                offspring.push_back(mutate(b, space, cfg.mutation_prob, rng));
        }
        const bool novel = score_within_budget(bank, offspring);
        stalled = novel ? 0 : stalled + 1;
        for (const auto& s : offspring) stats.observe(*bank.cached(s));
        next.insert(next.end(), offspring.begin(), offspring.end());
        if (next.empty()) break;
        pop = std::move(next);
    }
}

void nsga2(OracleBank& bank, const MutationSpace& space, const GaConfig& cfg,
           int init_max_mut, Rng& rng) {
    if (bank.budget_remaining() < cfg.population_size)
        throw ConfigError("nsga2 needs budget >= population size");
    bank.set_phase("baseline");

    std::vector<Sequence> pop = sample_initial(space, cfg.population_size, init_max_mut, rng);
    bank.score(pop);

    std::bernoulli_distribution do_crossover(cfg.crossover_rate);
    int stalled = 0;
    while (bank.budget_remaining() > 0 && stalled < cfg.stall_generations) {
        std::vector<ScoreVector> scores;
        scores.reserve(pop.size());
        for (const auto& s : pop) scores.push_back(*bank.cached(s));

        // crowded-comparison fitness: lower rank dominates, crowding breaks ties
        const auto fronts = non_dominated_sort(scores);
        std::vector<double> rank(pop.size()), crowd(pop.size());
        for (std::size_t f = 0; f < fronts.size(); ++f) {
            std::vector<ScoreVector> fp;
            for (int idx : fronts[f]) fp.push_back(scores[idx]);
            const auto cd = crowding_distance(fp);
            for (std::size_t i = 0; i < fronts[f].size(); ++i) {
                rank[fronts[f][i]] = static_cast<double>(f);
                crowd[fronts[f][i]] = cd[i];
            }
        }
        std::vector<double> fit(pop.size());
        for (std::size_t i = 0; i < pop.size(); ++i) {
            const double c = std::isinf(crowd[i]) ? 1.0 : crowd[i] / (1.0 + crowd[i]);
            fit[i] = -rank[i] + 0.5 * c;  // rank gaps exceed any crowding bonus
        }

        std::vector<Sequence> offspring;
        while (static_cast<int>(offspring.size()) < cfg.population_size) {
            Sequence a = pop[tournament(fit, cfg.tournament_size, rng)];
            Sequence b = pop[tournament(fit, cfg.tournament_size, rng)];
            if (do_crossover(rng)) std::tie(a, b) = single_point_crossover(a, b, space, rng);
            offspring.push_back(mutate(a, space, cfg.mutation_prob, rng));
            if (static_cast<int>(offspring.size()) < cfg.population_size)
                offspring.push_back(mutate(b, space, cfg.mutation_prob, rng));
        }
        const bool novel = score_within_budget(bank, offspring);
        stalled = novel ? 0 : stalled + 1;

        // environmental selection over parents + offspring
        std::vector<Sequence> combined = pop;
        combined.insert(combined.end(), offspring.begin(), offspring.end());
        std::vector<ScoreVector> cscores;
        cscores.reserve(combined.size());
        for (const auto& s : combined) cscores.push_back(*bank.cached(s));
        const auto cfronts = non_dominated_sort(cscores);

        std::vector<Sequence> next;
        next.reserve(cfg.population_size);
        for (const auto& front : cfronts) {
            if (static_cast<int>(next.size()) >= cfg.population_size) break;
            if (static_cast<int>(next.size() + front.size()) <= cfg.population_size) {
                for (int idx : front) next.push_back(combined[idx]);
                continue;
            }
            std::vector<ScoreVector> fp;
            for (int idx : front) fp.push_back(cscores[idx]);
            const auto cd = crowding_distance(fp);
            std::vector<int> order(front.size());
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
            std::stable_sort(order.begin(), order.end(),
                             [&](int x, int y) { return cd[x] > cd[y]; });
            for (int i : order) {
                if (static_cast<int>(next.size()) >= cfg.population_size) break;
                next.push_back(combined[front[i]]);
            }
        }
        if (next.empty()) break;
        pop = std::move(next);
    }
}

}  // namespace boat
