// SPDX-License-Identifier: Apache-2.0
#include "boat/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace boat {

using json = nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                    const std::string& where) {
    for (const auto& [key, value] : obj.items())
        if (!allowed.count(key))
            throw ConfigError("unknown key '" + key + "' in " + where);
}

template <typename T>
T get_or(const json& obj, const std::string& key, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("invalid value for '" + key + "'");
    }
}

void apply_override(json& root, const std::string& spec) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos)
        throw ConfigError("override must look like key=value, got '" + spec + "'");
    const std::string path = spec.substr(0, eq);
    const std::string value_text = spec.substr(eq + 1);

    json value;
    try {
        value = json::parse(value_text);
    } catch (const json::exception&) {
        value = value_text;  // bare strings stay strings
    }

    json* node = &root;
    std::istringstream ps(path);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ps, part, '.')) parts.push_back(part);
    if (parts.empty()) throw ConfigError("empty override key in '" + spec + "'");
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
        if (!node->contains(parts[i])) (*node)[parts[i]] = json::object();
        node = &(*node)[parts[i]];
        if (!node->is_object())
            throw ConfigError("override path '" + path + "' crosses a non-object");
    }
    (*node)[parts.back()] = value;
}

std::string resolve(const std::string& base_dir, const std::string& path) {
    namespace fs = std::filesystem;
    if (path.empty() || fs::path(path).is_absolute()) return path;
    return (fs::path(base_dir) / path).string();
}

GaConfig parse_ga(const json& g) {
    reject_unknown(g,
                   {"population_size", "generations", "tournament_size", "crossover_rate",
                    "mutation_prob", "batch_crossover_rate", "init_perturb_prob", "elites",
                    "stall_generations"},
                   "ga");
    GaConfig cfg;
    cfg.population_size = get_or(g, "population_size", cfg.population_size);
    cfg.generations = get_or(g, "generations", cfg.generations);
    cfg.tournament_size = get_or(g, "tournament_size", cfg.tournament_size);
    cfg.crossover_rate = get_or(g, "crossover_rate", cfg.crossover_rate);
    cfg.mutation_prob = get_or(g, "mutation_prob", cfg.mutation_prob);
    cfg.batch_crossover_rate = get_or(g, "batch_crossover_rate", cfg.batch_crossover_rate);
    cfg.init_perturb_prob = get_or(g, "init_perturb_prob", cfg.init_perturb_prob);
    cfg.elites = get_or(g, "elites", cfg.elites);
    cfg.stall_generations = get_or(g, "stall_generations", cfg.stall_generations);
    for (double p : {cfg.crossover_rate, cfg.mutation_prob, cfg.batch_crossover_rate,
                     cfg.init_perturb_prob})
        if (p < 0.0 || p > 1.0) throw ConfigError("GA probabilities must be in [0, 1]");
    if (cfg.population_size < 1 || cfg.generations < 0 || cfg.tournament_size < 1)
        throw ConfigError("GA sizes must be positive");
    return cfg;
}

void validate_oracle_spec(const json& o, std::set<std::string>& names) {
    reject_unknown(o,
                   {"name", "kind", "direction", "type", "table", "weights", "default_weight",
                    "target", "command", "workdir", "startup_timeout_s", "request_timeout_s"},
                   "oracles[]");
    const std::string name = get_or<std::string>(o, "name", "");
    if (name.empty()) throw ConfigError("oracle needs a non-empty name");
    if (!names.insert(name).second) throw ConfigError("duplicate oracle name '" + name + "'");
    const std::string kind = get_or<std::string>(o, "kind", "builtin");
    if (kind != "builtin" && kind != "external")
        throw ConfigError("oracle kind must be builtin or external");
    const std::string dir = get_or<std::string>(o, "direction", "maximize");
    if (dir != "maximize" && dir != "minimize")
        throw ConfigError("oracle direction must be maximize or minimize");
    if (kind == "builtin") {
        const std::string type = get_or<std::string>(o, "type", "");
        if (type != "pwm" && type != "lookup" && type != "motif-distance")
            throw ConfigError("builtin oracle type must be pwm, lookup, or motif-distance");
    } else if (!o.contains("command") || !o.at("command").is_array() ||
               o.at("command").empty()) {
        throw ConfigError("external oracle '" + name + "' needs a command array");
    }
}

}  // namespace

LoadedConfig LoadedConfig::load(const std::string& path,
                                const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), std::filesystem::path(path).parent_path().string(), overrides);
}

LoadedConfig LoadedConfig::parse(const std::string& text, const std::string& base_dir,
                                 const std::vector<std::string>& overrides) {
    json root;
    try {
        root = json::parse(text, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) throw ConfigError("config root must be a JSON object");
    for (const auto& ov : overrides) apply_override(root, ov);

    reject_unknown(root,
                   {"space_file", "method", "q", "budget", "n_init", "init_max_mut", "encoder",
                    "external_embedding_file", "mc_samples", "reference", "seed",
                    "count_init_in_budget", "front_seed_weight", "hyperopt_small_n",
                    "hyperopt_interval", "ga", "oracles", "benchmark", "enumerate_cap",
                    "entropy_window"},
                   "config");

    LoadedConfig cfg;
    cfg.base_dir_ = base_dir.empty() ? "." : base_dir;

    const std::string space_file = get_or<std::string>(root, "space_file", "");
    if (space_file.empty()) throw ConfigError("config needs a space_file");
    // the snapshot must stay loadable from a different directory (report
    // regeneration), so relative paths are pinned down before dumping it
    const std::string space_path =
        std::filesystem::absolute(resolve(cfg.base_dir_, space_file)).string();
    root["space_file"] = space_path;
    if (!get_or<std::string>(root, "external_embedding_file", "").empty())
        root["external_embedding_file"] =
            std::filesystem::absolute(
                resolve(cfg.base_dir_, root.at("external_embedding_file").get<std::string>()))
                .string();
    cfg.snapshot_ = root.dump(2) + "\n";
    cfg.space_ = MutationSpace::load(space_path);

    EngineConfig& e = cfg.engine_;
    e.method = parse_method(get_or<std::string>(root, "method", "boat-ehvi"));
    e.q = get_or(root, "q", e.q);
    e.budget = get_or(root, "budget", e.budget);
    e.n_init = get_or(root, "n_init", e.n_init);
    e.init_max_mut = get_or(root, "init_max_mut", e.init_max_mut);
    e.encoder = get_or<std::string>(root, "encoder", e.encoder);
    e.external_embedding_file =
        resolve(cfg.base_dir_, get_or<std::string>(root, "external_embedding_file", ""));
    e.mc_samples = get_or(root, "mc_samples", e.mc_samples);
    e.seed = get_or<std::uint64_t>(root, "seed", e.seed);
    e.count_init_in_budget = get_or(root, "count_init_in_budget", e.count_init_in_budget);
    e.front_seed_weight = get_or(root, "front_seed_weight", e.front_seed_weight);
    e.hyperopt_small_n = get_or(root, "hyperopt_small_n", e.hyperopt_small_n);
    e.hyperopt_interval = get_or(root, "hyperopt_interval", e.hyperopt_interval);
    if (root.contains("ga")) e.ga = parse_ga(root.at("ga"));

    if (root.contains("reference")) {
        const json& r = root.at("reference");
        if (r.is_string() && r.get<std::string>() == "auto") {
            e.reference.reset();
        } else if (r.is_array()) {
            ScoreVector ref(static_cast<Eigen::Index>(r.size()));
            for (std::size_t i = 0; i < r.size(); ++i) {
                if (!r[i].is_number()) throw ConfigError("reference entries must be numbers");
                ref[static_cast<Eigen::Index>(i)] = r[i].get<double>();
            }
            e.reference = ref;
        } else {
            throw ConfigError("reference must be \"auto\" or an array of numbers");
        }
    }

    if (!root.contains("oracles") || !root.at("oracles").is_array() ||
        root.at("oracles").empty())
        throw ConfigError("config needs a non-empty oracles array");
    std::set<std::string> names;
    for (const auto& o : root.at("oracles")) validate_oracle_spec(o, names);
    cfg.oracles_json_ = root.at("oracles").dump();

    if (root.contains("benchmark")) {
        const json& b = root.at("benchmark");
        reject_unknown(b, {"methods", "seeds", "ground_truth"}, "benchmark");
        cfg.benchmark_.methods = get_or(b, "methods", std::vector<std::string>{});
        cfg.benchmark_.seeds = get_or(b, "seeds", std::vector<std::uint64_t>{});
        cfg.benchmark_.ground_truth = get_or(b, "ground_truth", false);
        for (const auto& m : cfg.benchmark_.methods) parse_method(m);  // validate early
    }
    cfg.enumerate_cap_ = get_or(root, "enumerate_cap", cfg.enumerate_cap_);

    if (e.budget < 0) throw ConfigError("budget must be non-negative");
    if (e.n_init < 1) throw ConfigError("n_init must be positive");
    if (e.count_init_in_budget && e.budget > 0 && e.budget < e.n_init)
        throw ConfigError("budget must cover n_init");
    if (e.mc_samples < 1) throw ConfigError("mc_samples must be positive");
    return cfg;
}

std::vector<std::unique_ptr<Oracle>> LoadedConfig::make_oracles() const {
    const json oracles = json::parse(oracles_json_);
    const std::size_t L = space_.length();
    std::vector<std::unique_ptr<Oracle>> out;
    for (const auto& o : oracles) {
        const std::string name = o.at("name");
        const Direction dir = get_or<std::string>(o, "direction", "maximize") == "minimize"
                                  ? Direction::minimize
                                  : Direction::maximize;
        if (get_or<std::string>(o, "kind", "builtin") == "external") {
            ExternalOracle::Options opts;
            opts.command = o.at("command").get<std::vector<std::string>>();
            opts.workdir = resolve(base_dir_, get_or<std::string>(o, "workdir", ""));
            opts.startup_timeout_s = get_or(o, "startup_timeout_s", opts.startup_timeout_s);
            opts.request_timeout_s = get_or(o, "request_timeout_s", opts.request_timeout_s);
            out.push_back(ExternalOracle::spawn(opts));
            continue;
        }
        const std::string type = o.at("type");
        if (type == "lookup") {
            std::map<std::string, double> table;
            for (const auto& [seq, val] : o.at("table").items()) {
                if (!val.is_number()) throw ConfigError("lookup values must be numbers");
                table[seq] = val.get<double>();
            }
            out.push_back(std::make_unique<LookupOracle>(name, dir, std::move(table)));
        } else if (type == "motif-distance") {
            const std::string target = o.at("target");
            out.push_back(std::make_unique<MotifDistanceOracle>(
                name, dir, validate_sequence(target, L)));
        } else {  // pwm: sparse position -> letter -> weight, default elsewhere
            const double def = get_or(o, "default_weight", 0.0);
            std::vector<std::unordered_map<char, double>> weights(L);
            for (auto& w : weights)
                for (char c : kAminoAcids) w[c] = def;
            if (o.contains("weights"))
                for (const auto& [pos_text, letters] : o.at("weights").items()) {
                    const int p = std::stoi(pos_text);
                    if (p < 0 || p >= static_cast<int>(L))
                        throw ConfigError("PWM position " + pos_text + " out of range");
                    for (const auto& [letter, val] : letters.items()) {
                        if (letter.size() != 1 || !is_canonical(letter[0]))
                            throw ConfigError("invalid PWM letter '" + letter + "'");
                        if (!val.is_number())
                            throw ConfigError("PWM weights must be numbers");
                        weights[p][letter[0]] = val.get<double>();
                    }
                }
            out.push_back(std::make_unique<PwmOracle>(name, dir, std::move(weights)));
        }
    }
    return out;
}

}  // namespace boat
