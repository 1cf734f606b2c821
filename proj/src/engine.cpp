// SPDX-License-Identifier: Apache-2.0
#include "boat/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "boat/acquisition.hpp"
#include "boat/encoding.hpp"

namespace boat {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDuplicatePenalty = 1e6;

Sequence random_feasible(const MutationSpace& space, int max_mut, Rng& rng,
                         int max_attempts = 2000) {
    const auto slots = static_cast<int>(space.editable_positions.size());
    if (slots == 0 || max_mut < 1) return space.parental;
    std::uniform_int_distribution<int> pick_count(1, std::min(max_mut, slots));
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        std::string text = space.parental.str();
        const int j = pick_count(rng);
        // j distinct editable slots
        std::vector<int> chosen;
        while (static_cast<int>(chosen.size()) < j) {
            std::uniform_int_distribution<int> pick_slot(0, slots - 1);
            const int s = pick_slot(rng);
            if (std::find(chosen.begin(), chosen.end(), s) == chosen.end())
                chosen.push_back(s);
        }
        bool ok = true;
        for (int s : chosen) {
            const std::string& alts = space.alternatives(s);
            if (alts.empty()) {
                ok = false;
                break;
            }
            std::uniform_int_distribution<int> pick_letter(0,
                                                           static_cast<int>(alts.size()) - 1);
            text[space.editable_positions[s]] = alts[pick_letter(rng)];
        }
        if (!ok) continue;
        Sequence cand = Sequence::unchecked(std::move(text));
        if (liability_check(cand, space.liabilities).empty()) return cand;
    }
    return space.parental;
}

std::string batch_key(const std::vector<Sequence>& batch) {
    std::string key;
    for (const auto& s : batch) {
        key += s.str();
        key += '|';
    }
    return key;
}

ScoreVector reference_for(const EngineConfig& cfg, const std::vector<OracleCall>& calls) {
    if (cfg.reference) return *cfg.reference;
    std::vector<ScoreVector> init_scores;
    const std::size_t n = std::min<std::size_t>(calls.size(), cfg.n_init);
    for (std::size_t i = 0; i < n; ++i) init_scores.push_back(calls[i].scores);
    return default_reference(init_scores);
}

void run_random(const MutationSpace& space, OracleBank& bank,
                Rng& rng) {
    bank.set_phase("baseline");
    int consecutive_duplicates = 0;
    while (bank.budget_remaining() > 0 && consecutive_duplicates < 100000) {
        const Sequence cand = random_feasible(space, space.max_mutations, rng);
        if (bank.cached(cand)) {
            ++consecutive_duplicates;
            continue;
        }
        consecutive_duplicates = 0;
        bank.score({cand});
    }
}

}  // namespace

Method parse_method(const std::string& name) {
    if (name == "boat-ehvi") return Method::boat_ehvi;
    if (name == "boat-qehvi") return Method::boat_qehvi;
    if (name == "boat-qnehvi") return Method::boat_qnehvi;
    if (name == "boat-logei") return Method::boat_logei;
    if (name == "ga-sum") return Method::ga_sum;
    if (name == "nsga2") return Method::nsga2;
    if (name == "random") return Method::random_search;
    throw ConfigError("unknown method '" + name + "'");
}

std::string method_name(Method m) {
    switch (m) {
        case Method::boat_ehvi: return "boat-ehvi";
        case Method::boat_qehvi: return "boat-qehvi";
        case Method::boat_qnehvi: return "boat-qnehvi";
        case Method::boat_logei: return "boat-logei";
        case Method::ga_sum: return "ga-sum";
        case Method::nsga2: return "nsga2";
        case Method::random_search: return "random";
    }
    throw ConfigError("invalid method enum");
}

bool is_boat_method(Method m) {
    return m == Method::boat_ehvi || m == Method::boat_qehvi || m == Method::boat_qnehvi ||
           m == Method::boat_logei;
}

bool is_batch_method(Method m) {
    return m == Method::boat_qehvi || m == Method::boat_qnehvi;
}

RunLog run(const EngineConfig& cfg, const MutationSpace& space, OracleBank& bank) {
    if (cfg.budget < 1) throw ConfigError("budget must be positive");
    if (cfg.q < 1) throw ConfigError("batch size must be positive");
    const int q = is_batch_method(cfg.method) ? cfg.q : 1;
    const int k = bank.objectives();

    RunLog log;
    log.method = method_name(cfg.method);
    log.seed = cfg.seed;
    log.n_init = cfg.n_init;
    log.q = q;

    if (cfg.method == Method::ga_sum || cfg.method == Method::nsga2) {
        Rng rng(mix_seed(cfg.seed, 7));
        if (cfg.method == Method::ga_sum)
            ga_sum_baseline(bank, space, cfg.ga, cfg.init_max_mut, rng);
        else
            nsga2(bank, space, cfg.ga, cfg.init_max_mut, rng);
        log.evaluations = bank.call_log();
        log.reference = reference_for(cfg, log.evaluations);
        return log;
    }

    // initialization phase (boat methods and random)
    if (bank.budget_remaining() < cfg.n_init)
        throw ConfigError("budget does not cover the initial design");
    bank.set_phase("init");
    Rng init_rng(mix_seed(cfg.seed, 1));
    const std::vector<Sequence> init =
        sample_initial(space, cfg.n_init, cfg.init_max_mut, init_rng);
    bank.score(init);
    const ScoreVector ref = reference_for(cfg, bank.call_log());

    if (cfg.method == Method::random_search) {
        Rng rng(mix_seed(cfg.seed, 9));
        run_random(space, bank, rng);
        log.evaluations = bank.call_log();
        log.reference = ref;
        return log;
    }

    if (cfg.method == Method::boat_logei && k != 1)
        throw ConfigError("boat-logei requires a single objective");

    const auto encoder = make_encoder(cfg.encoder, space, cfg.external_embedding_file);
    std::vector<Embedding> all_X;
    ParetoState front(ref);
    auto sync_state = [&] {
        const auto& calls = bank.call_log();
        while (all_X.size() < calls.size()) {
            const auto i = static_cast<std::int64_t>(all_X.size());
            all_X.push_back(encoder->encode(calls[i].sequence));
            front.update(i, calls[i].scores);
        }
    };
    sync_state();

    bank.set_phase("bo");
    std::vector<GpHyperparams> last_hp;
    Rng fill_rng(mix_seed(cfg.seed, 11));
    int iter = 0;
    while (bank.budget_remaining() > 0) {
        ++iter;
        const auto& calls = bank.call_log();
        const auto n = static_cast<Eigen::Index>(calls.size());
        Eigen::MatrixXd Y(n, k);
        for (Eigen::Index i = 0; i < n; ++i) Y.row(i) = calls[i].scores.transpose();

        GpFitConfig fc;
        fc.optimize = n <= cfg.hyperopt_small_n || (iter - 1) % cfg.hyperopt_interval == 0;
        fc.per_objective_init = last_hp;
        const SurrogateModel model = SurrogateModel::fit(all_X, Y, fc);
        last_hp.clear();
        for (int j = 0; j < k; ++j) last_hp.push_back(model.hyperparams(j));

        AcquisitionContext ctx;
        ctx.ref = ref;
        for (const auto& e : front.front()) ctx.front.push_back(e.score);
        ctx.mc_samples = cfg.mc_samples;
        ctx.seed = mix_seed(cfg.seed, 10000 + static_cast<std::uint64_t>(iter));

        // acquisition dispatch: exact forms when available, MC otherwise
        enum class Kind { logei, ehvi2d, mc } kind;
        if (k == 1)
            kind = Kind::logei;
        else if (k == 2 && q == 1 && cfg.method != Method::boat_qnehvi)
            kind = Kind::ehvi2d;
        else
            kind = Kind::mc;

        std::optional<MonteCarloAcquisition> mc;
        if (kind == Kind::mc) {
            if (cfg.method == Method::boat_qnehvi) {
                std::vector<Embedding> observed;
                for (const auto& e : front.front()) observed.push_back(all_X[e.id]);
                mc = MonteCarloAcquisition::qnehvi(model, observed, ctx, q);
            } else {
                mc = MonteCarloAcquisition::qehvi(model, ctx, q);
            }
        }
        double best_observed = -kInf;  // for logei
        if (kind == Kind::logei)
            for (Eigen::Index i = 0; i < n; ++i) best_observed = std::max(best_observed, Y(i, 0));

        std::unordered_map<std::string, double> memo;
        PopulationFitness fitness = [&](const std::vector<std::vector<Sequence>>& pop) {
            std::vector<double> out(pop.size());
            std::vector<int> todo;
            std::vector<std::string> keys(pop.size());
            for (std::size_t i = 0; i < pop.size(); ++i) {
                keys[i] = batch_key(pop[i]);
                auto it = memo.find(keys[i]);
                if (it != memo.end())
                    out[i] = it->second;
                else if (std::find_if(todo.begin(), todo.end(), [&](int t) {
                             return keys[t] == keys[i];
                         }) == todo.end())
                    todo.push_back(static_cast<int>(i));
                else
                    out[i] = std::numeric_limits<double>::quiet_NaN();  // filled below
            }
            if (!todo.empty()) {
                std::vector<double> vals(todo.size(), 0.0);
                if (kind == Kind::mc) {
                    std::vector<std::vector<Embedding>> batches;
                    batches.reserve(todo.size());
                    for (int t : todo) {
                        std::vector<Embedding> b;
                        b.reserve(q);
                        for (const auto& s : pop[t]) b.push_back(encoder->encode(s));
                        batches.push_back(std::move(b));
                    }
                    vals = mc->evaluate_many(batches);
                } else {
                    std::vector<Embedding> flat;
                    flat.reserve(todo.size());
                    for (int t : todo) flat.push_back(encoder->encode(pop[t].front()));
                    const Eigen::MatrixXd Tq = tanimoto_cross(flat, model.train_inputs());
                    if (kind == Kind::logei) {
                        const WhitenedPosterior wp = model.whitened_posterior(0, Tq);
                        for (std::size_t i = 0; i < todo.size(); ++i)
                            vals[i] = log_ei(wp.mean[i], std::sqrt(wp.var(i)), best_observed);
                    } else {
                        const WhitenedPosterior w0 = model.whitened_posterior(0, Tq);
                        const WhitenedPosterior w1 = model.whitened_posterior(1, Tq);
                        for (std::size_t i = 0; i < todo.size(); ++i) {
                            const Eigen::Vector2d mean(w0.mean[i], w1.mean[i]);
                            const Eigen::Vector2d std_dev(std::sqrt(w0.var(i)),
                                                          std::sqrt(w1.var(i)));
                            vals[i] = ehvi_2d(mean, std_dev, ctx);
                        }
                    }
                }
                // duplicate mask: re-proposing scored sequences wastes budget
                for (std::size_t i = 0; i < todo.size(); ++i) {
                    const auto& batch = pop[todo[i]];
                    int dups = 0;
                    std::unordered_set<Sequence> seen;
                    for (const auto& s : batch)
                        if (bank.cached(s) || !seen.insert(s).second) ++dups;
                    if (dups > 0) vals[i] = q == 1 ? -kInf : vals[i] - kDuplicatePenalty * dups;
                    memo[keys[todo[i]]] = vals[i];
                }
            }
            for (std::size_t i = 0; i < pop.size(); ++i) out[i] = memo[keys[i]];
            return out;
        };

        // seed pool: everything evaluated, front members weighted extra
        std::vector<Sequence> seed_pool;
        seed_pool.reserve(calls.size() + front.front().size() * (cfg.front_seed_weight - 1));
        for (const auto& c : calls) seed_pool.push_back(c.sequence);
        for (int w = 1; w < cfg.front_seed_weight; ++w)
            for (const auto& e : front.front()) seed_pool.push_back(calls[e.id].sequence);

        Rng ga_rng(mix_seed(cfg.seed, 20000 + static_cast<std::uint64_t>(iter)));
        const auto t0 = std::chrono::steady_clock::now();
        GaResult ga = ga_batch_optimize(fitness, space, cfg.ga, q, seed_pool, ga_rng);
        const double ga_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        // replace members that are already scored (or repeated in-batch) with
        // fresh feasible sequences so the whole batch spends budget usefully
        std::vector<Sequence> batch = ga.best;
        std::unordered_set<Sequence> batch_set;
        bool any_novel = false;
        for (auto& s : batch) {
            if (bank.cached(s) || !batch_set.insert(s).second) {
                for (int attempt = 0; attempt < 2000; ++attempt) {
                    const Sequence r = random_feasible(space, space.max_mutations, fill_rng);
                    if (!bank.cached(r) && batch_set.insert(r).second) {
                        s = r;
                        break;
                    }
                }
            }
            if (!bank.cached(s)) any_novel = true;
        }
        if (!any_novel) break;  // space exhausted below the budget
        if (static_cast<int>(batch.size()) > bank.budget_remaining())
            batch.resize(bank.budget_remaining());
        bank.score(batch);
        sync_state();

        IterationDiagnostics diag;
        diag.iteration = iter;
        diag.oracle_calls = bank.calls_made();
        diag.hyperparams = last_hp;
        for (int j = 0; j < k; ++j) diag.lml.push_back(model.fitted_lml(j));
        diag.acq_value = ga.best_fitness;
        diag.ga_seconds = ga_seconds;
        log.diagnostics.push_back(std::move(diag));
    }

    log.evaluations = bank.call_log();
    log.reference = ref;
    return log;
}

std::vector<TracePoint> hv_trace(const RunLog& log, const ScoreVector& ref) {
    ParetoState state(ref);
    std::vector<TracePoint> trace;
    trace.reserve(log.evaluations.size());
    int bo_calls = 0;
    for (std::size_t i = 0; i < log.evaluations.size(); ++i) {
        const auto& call = log.evaluations[i];
        state.update(static_cast<std::int64_t>(i), call.scores);
        int iteration = 0;
        if (call.phase != "init") {
            ++bo_calls;
            iteration = (bo_calls - 1) / std::max(1, log.q) + 1;
        }
        trace.push_back({static_cast<int>(i) + 1, iteration, state.hv()});
    }
    return trace;
}

std::vector<EntropyPoint> entropy_trace(const RunLog& log, int window) {
    if (window < 1) throw ConfigError("entropy window must be >= 1");
    std::vector<Sequence> seqs;
    seqs.reserve(log.evaluations.size());
    for (const auto& c : log.evaluations) seqs.push_back(c.sequence);

    std::vector<EntropyPoint> points;
    const int total = static_cast<int>(seqs.size());
    for (int c = window; c <= total; c += window) {
        const std::vector<Sequence> cumulative(seqs.begin(), seqs.begin() + c);
        const std::vector<Sequence> windowed(seqs.begin() + (c - window), seqs.begin() + c);
        points.push_back({c, shannon_entropy(cumulative), shannon_entropy(windowed)});
    }
    if (total > 0 && total % window != 0) {
        const int c = total;
        const int w0 = std::max(0, c - window);
        const std::vector<Sequence> windowed(seqs.begin() + w0, seqs.begin() + c);
        points.push_back({c, shannon_entropy(seqs), shannon_entropy(windowed)});
    }
    return points;
}

ParetoState final_front(const RunLog& log, const ScoreVector& ref) {
    ParetoState state(ref);
    for (std::size_t i = 0; i < log.evaluations.size(); ++i)
        state.update(static_cast<std::int64_t>(i), log.evaluations[i].scores);
    return state;
}

// ----------------------------------------------------------------- reports

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

void write_run_dir(const std::string& dir, const RunLog& log, const MutationSpace& space,
                   const std::string& config_snapshot, int entropy_window) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const int k = log.evaluations.empty() ? static_cast<int>(log.reference.size())
                                          : static_cast<int>(log.evaluations[0].scores.size());

    atomic_write_file(dir + "/config.snapshot", config_snapshot);

    {
        std::ostringstream os;
        os << "call_index,sequence,phase";
        for (int j = 1; j <= k; ++j) os << ",score_" << j;
        os << '\n';
        for (const auto& c : log.evaluations) {
            os << c.index << ',' << c.sequence.str() << ',' << c.phase;
            for (Eigen::Index j = 0; j < c.scores.size(); ++j) os << ',' << fmt(c.scores[j]);
            os << '\n';
        }
        atomic_write_file(dir + "/runlog.csv", os.str());
    }
    {
        ParetoState state = final_front(log, log.reference);
        std::vector<FrontEntry> members = state.front();
        std::sort(members.begin(), members.end(),
                  [](const FrontEntry& a, const FrontEntry& b) { return a.id < b.id; });
        std::ostringstream os;
        os << "sequence,mutation_count";
        for (int j = 1; j <= k; ++j) os << ",score_" << j;
        os << '\n';
        for (const auto& m : members) {
            const Sequence& s = log.evaluations[m.id].sequence;
            os << s.str() << ',' << mutation_count(s, space);
            for (Eigen::Index j = 0; j < m.score.size(); ++j) os << ',' << fmt(m.score[j]);
            os << '\n';
        }
        atomic_write_file(dir + "/front.csv", os.str());
    }
    {
        std::ostringstream os;
        os << "oracle_calls,iteration,hypervolume\n";
        for (const auto& p : hv_trace(log, log.reference))
            os << p.oracle_calls << ',' << p.iteration << ',' << fmt(p.hv) << '\n';
        atomic_write_file(dir + "/hv_trace.csv", os.str());
    }
    {
        std::ostringstream os;
        os << "oracle_calls,cumulative_entropy,windowed_entropy\n";
        for (const auto& p : entropy_trace(log, entropy_window))
            os << p.oracle_calls << ',' << fmt(p.cumulative) << ',' << fmt(p.windowed) << '\n';
        atomic_write_file(dir + "/entropy_trace.csv", os.str());
    }
    {
        std::ostringstream os;
        os << "iteration,oracle_calls,acq_value,ga_seconds";
        for (int j = 1; j <= k; ++j)
            os << ",lml_" << j << ",signal_variance_" << j << ",noise_variance_" << j;
        os << '\n';
        for (const auto& d : log.diagnostics) {
            os << d.iteration << ',' << d.oracle_calls << ',' << fmt(d.acq_value) << ','
               << fmt(d.ga_seconds);
            for (std::size_t j = 0; j < d.hyperparams.size(); ++j)
                os << ',' << fmt(d.lml[j]) << ',' << fmt(d.hyperparams[j].signal_variance)
                   << ',' << fmt(d.hyperparams[j].noise_variance);
            os << '\n';
        }
        atomic_write_file(dir + "/diagnostics.csv", os.str());
    }
}

RunLog read_runlog_csv(const std::string& path, const ScoreVector& ref) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open runlog: " + path);
    RunLog log;
    log.reference = ref;
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("empty runlog: " + path);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (cells.size() < 4) throw ConfigError("malformed runlog row: " + line);
        OracleCall call;
        call.index = std::stoi(cells[0]);
        call.sequence = Sequence::unchecked(cells[1]);
        call.phase = cells[2];
        call.scores.resize(static_cast<Eigen::Index>(cells.size()) - 3);
        for (std::size_t j = 3; j < cells.size(); ++j)
            call.scores[static_cast<Eigen::Index>(j - 3)] = std::stod(cells[j]);
        call.raw = call.scores;
        log.evaluations.push_back(std::move(call));
    }
    return log;
}

MeanSeries aggregate_hv(const std::vector<std::vector<TracePoint>>& traces) {
    MeanSeries out;
    if (traces.empty()) return out;
    std::set<int> grid;
    for (const auto& t : traces)
        for (const auto& p : t) grid.insert(p.oracle_calls);
    for (int c : grid) {
        double sum = 0.0, sum2 = 0.0;
        int n = 0;
        for (const auto& t : traces) {
            // step-function value of this trace at call count c
            double v = 0.0;
            bool seen = false;
            for (const auto& p : t) {
                if (p.oracle_calls > c) break;
                v = p.hv;
                seen = true;
            }
            if (!seen) continue;
            sum += v;
            sum2 += v * v;
            ++n;
        }
        if (n == 0) continue;
        const double mean = sum / n;
        const double var = n > 1 ? std::max(0.0, (sum2 - n * mean * mean) / (n - 1)) : 0.0;
        out.oracle_calls.push_back(c);
        out.mean.push_back(mean);
        out.se.push_back(n > 1 ? std::sqrt(var / n) : 0.0);
    }
    return out;
}

}  // namespace boat
