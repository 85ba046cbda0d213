#pragma once

// Run configuration files.
//
// TOML layout (JSON uses the same nesting):
//
//   [gsa]            population, max_iterations, g0, tau, g_schedule ("linear"|"power"),
//                    beta, t0_gravity, kbest_final, sense, seed, parallelism
//   [space.<name>]   kind ("integer"|"continuous"), lower, upper   (declaration order kept)
//   [objective]      type ("toy-trainer"|"external"|"benchmark"), command, timeout, function,
//                    retries, strict, penalty_margin, penalty_default
//   [objective.toy_trainer]  dataset_seed, samples_per_class, epochs, patience, lr0,
//                            lr_drop, lr_period, validation_fraction
//
// Every section and key is optional; omitted values fall back to the defaults
// below (population 30, 15 iterations, batch_size/dropout_rate/neurons space,
// toy trainer). Unknown keys are rejected.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>
#include <toml.hpp>

#include "external.hpp"
#include "gsa.hpp"
#include "objectives.hpp"
#include "search_space.hpp"
#include "toy_trainer.hpp"

namespace gravopt {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr std::uint64_t default_seed = 42;
inline constexpr const char* seed_env_var = "GRAVOPT_SEED";

struct ObjectiveSpec {
    std::string type = "toy-trainer";
    ToyTrainerConfig toy{};
    std::vector<std::string> command;
    double timeout = 600.0;
    std::string function = "sphere";

    bool operator==(const ObjectiveSpec&) const = default;
};

struct RunConfig {
    GsaConfig gsa{};
    std::optional<std::uint64_t> file_seed;  // seed as written in the file, if any
    SearchSpace space = SearchSpace::hyperparameter_default();
    ObjectiveSpec objective{};
    FailurePolicy failure{};
    unsigned parallelism = 1;
};

/// CLI flag > GRAVOPT_SEED > config file > built-in default.
inline std::uint64_t resolve_seed(std::optional<std::uint64_t> cli, const char* env_value,
                                  std::optional<std::uint64_t> file) {
    if (cli) return *cli;
    if (env_value && *env_value) {
        const std::string s(env_value);
        if (s.find_first_not_of("0123456789") != std::string::npos)
            throw ConfigError(std::string(seed_env_var) + " must be an unsigned integer, got '" + s + "'");
        try {
            return std::stoull(s);
        } catch (const std::exception&) {
            throw ConfigError(std::string(seed_env_var) + " is out of range");
        }
    }
    if (file) return *file;
    return default_seed;
}

inline std::uint64_t resolve_seed(std::optional<std::uint64_t> cli, std::optional<std::uint64_t> file) {
    return resolve_seed(cli, std::getenv(seed_env_var), file);
}

namespace detail {

using ojson = nlohmann::ordered_json;

inline ojson toml_to_json(const toml::node& node);

inline ojson toml_table_to_json(const toml::table& table) {
    std::vector<std::pair<const toml::key*, const toml::node*>> items;
    for (auto&& [k, v] : table) items.emplace_back(&k, &v);
    // toml++ tables are key-sorted; restore declaration order
    std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
        const auto& sa = a.first->source().begin;
        const auto& sb = b.first->source().begin;
        return sa.line != sb.line ? sa.line < sb.line : sa.column < sb.column;
    });
    ojson out = ojson::object();
    for (auto& [k, v] : items) out[std::string(k->str())] = toml_to_json(*v);
    return out;
}

inline ojson toml_to_json(const toml::node& node) {
    if (auto t = node.as_table()) return toml_table_to_json(*t);
    if (auto a = node.as_array()) {
        ojson arr = ojson::array();
        for (auto&& e : *a) arr.push_back(toml_to_json(e));
        return arr;
    }
    if (auto s = node.as_string()) return s->get();
    if (auto i = node.as_integer()) return i->get();
    if (auto f = node.as_floating_point()) return f->get();
    if (auto b = node.as_boolean()) return b->get();
    throw ConfigError("unsupported TOML value type (dates and times are not used in run configs)");
}

inline void reject_unknown(const ojson& obj, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!obj.is_object()) throw ConfigError("'" + where + "' must be a table/object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!ok.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in '" + where + "'");
}

template <typename T>
T get_as(const ojson& obj, const char* key, const std::string& where, T fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    const std::string path = where + "." + key;
    if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError("'" + path + "' must be a boolean");
        return v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError("'" + path + "' must be a string");
        return v.get<std::string>();
    } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw ConfigError("'" + path + "' must be a number");
        return v.get<double>();
    } else {
        if (!v.is_number_integer()) throw ConfigError("'" + path + "' must be an integer");
        if (v.is_number_unsigned()) return static_cast<T>(v.get<std::uint64_t>());
        const auto i = v.get<std::int64_t>();
        if (i < 0 && std::is_unsigned_v<T>) throw ConfigError("'" + path + "' must be non-negative");
        return static_cast<T>(i);
    }
}

inline Sense parse_sense(const std::string& s) {
    if (s == "minimize") return Sense::minimize;
    if (s == "maximize") return Sense::maximize;
    throw ConfigError("sense must be 'minimize' or 'maximize', got '" + s + "'");
}

inline GSchedule parse_schedule(const std::string& s) {
    if (s == "linear") return GSchedule::linear;
    if (s == "power") return GSchedule::power;
    throw ConfigError("g_schedule must be 'linear' or 'power', got '" + s + "'");
}

}  // namespace detail

/// Builds a RunConfig from the JSON form (TOML files are converted first).
inline RunConfig config_from_json(const nlohmann::ordered_json& root) {
    using detail::get_as;
    detail::reject_unknown(root, {"gsa", "space", "objective"}, "<root>");
    RunConfig cfg;

    if (root.contains("gsa")) {
        const auto& g = root.at("gsa");
        detail::reject_unknown(g, {"population", "max_iterations", "g0", "tau", "g_schedule", "beta", "t0_gravity",
                                   "kbest_final", "sense", "seed", "parallelism"},
                               "gsa");
        auto& c = cfg.gsa;
        c.population = get_as<std::size_t>(g, "population", "gsa", c.population);
        c.max_iterations = get_as<std::size_t>(g, "max_iterations", "gsa", c.max_iterations);
        c.g0 = get_as<double>(g, "g0", "gsa", c.g0);
        c.tau = get_as<double>(g, "tau", "gsa", c.tau);
        c.g_schedule = detail::parse_schedule(get_as<std::string>(g, "g_schedule", "gsa", to_string(c.g_schedule)));
        c.beta = get_as<double>(g, "beta", "gsa", c.beta);
        c.t0_gravity = get_as<double>(g, "t0_gravity", "gsa", c.t0_gravity);
        c.kbest_final = get_as<std::size_t>(g, "kbest_final", "gsa", c.kbest_final);
        c.sense = detail::parse_sense(get_as<std::string>(g, "sense", "gsa", to_string(c.sense)));
        if (g.contains("seed")) cfg.file_seed = get_as<std::uint64_t>(g, "seed", "gsa", 0);
        cfg.parallelism = get_as<unsigned>(g, "parallelism", "gsa", cfg.parallelism);
        if (cfg.parallelism < 1) throw ConfigError("gsa.parallelism must be >= 1");
    }

    if (root.contains("space")) {
        const auto& s = root.at("space");
        if (!s.is_object() || s.empty()) throw ConfigError("'space' must contain at least one dimension table");
        std::vector<Dimension> dims;
        for (auto it = s.begin(); it != s.end(); ++it) {
            const std::string where = "space." + it.key();
            detail::reject_unknown(it.value(), {"kind", "lower", "upper"}, where);
            if (!it.value().contains("lower") || !it.value().contains("upper"))
                throw ConfigError("'" + where + "' needs lower and upper");
            const auto kind = get_as<std::string>(it.value(), "kind", where, "continuous");
            if (kind != "integer" && kind != "continuous")
                throw ConfigError("'" + where + ".kind' must be 'integer' or 'continuous'");
            dims.push_back({it.key(), kind == "integer" ? DimensionKind::integer : DimensionKind::continuous,
                            get_as<double>(it.value(), "lower", where, 0.0), get_as<double>(it.value(), "upper", where, 0.0)});
        }
        try {
            cfg.space = SearchSpace(std::move(dims));
        } catch (const SpaceError& e) {
            throw ConfigError(e.what());
        }
    }

    if (root.contains("objective")) {
        const auto& o = root.at("objective");
        detail::reject_unknown(o, {"type", "command", "timeout", "function", "retries", "strict", "penalty_margin",
                                   "penalty_default", "toy_trainer"},
                               "objective");
        auto& spec = cfg.objective;
        spec.type = get_as<std::string>(o, "type", "objective", spec.type);
        if (spec.type != "toy-trainer" && spec.type != "external" && spec.type != "benchmark")
            throw ConfigError("objective.type must be 'toy-trainer', 'external' or 'benchmark'");
        if (o.contains("command")) {
            const auto& c = o.at("command");
            if (c.is_string()) {
                spec.command = {c.get<std::string>()};
            } else if (c.is_array() && !c.empty() && std::all_of(c.begin(), c.end(), [](const auto& e) { return e.is_string(); })) {
                for (const auto& e : c) spec.command.push_back(e.get<std::string>());
            } else {
                throw ConfigError("objective.command must be a string or a non-empty array of strings");
            }
        }
        spec.timeout = get_as<double>(o, "timeout", "objective", spec.timeout);
        if (!(spec.timeout > 0.0)) throw ConfigError("objective.timeout must be > 0");
        spec.function = get_as<std::string>(o, "function", "objective", spec.function);
        cfg.failure.retries = get_as<int>(o, "retries", "objective", cfg.failure.retries);
        if (cfg.failure.retries < 0) throw ConfigError("objective.retries must be >= 0");
        cfg.failure.strict = get_as<bool>(o, "strict", "objective", cfg.failure.strict);
        cfg.failure.penalty_margin = get_as<double>(o, "penalty_margin", "objective", cfg.failure.penalty_margin);
        cfg.failure.penalty_default = get_as<double>(o, "penalty_default", "objective", cfg.failure.penalty_default);

        if (o.contains("toy_trainer")) {
            const auto& t = o.at("toy_trainer");
            const std::string w = "objective.toy_trainer";
            detail::reject_unknown(t, {"dataset_seed", "samples_per_class", "epochs", "patience", "lr0", "lr_drop",
                                       "lr_period", "validation_fraction"},
                                   w);
            auto& tc = spec.toy;
            tc.dataset_seed = get_as<std::uint64_t>(t, "dataset_seed", w, tc.dataset_seed);
            tc.samples_per_class = get_as<std::size_t>(t, "samples_per_class", w, tc.samples_per_class);
            tc.epochs = get_as<int>(t, "epochs", w, tc.epochs);
            tc.patience = get_as<int>(t, "patience", w, tc.patience);
            tc.lr0 = get_as<double>(t, "lr0", w, tc.lr0);
            tc.lr_drop = get_as<double>(t, "lr_drop", w, tc.lr_drop);
            tc.lr_period = get_as<int>(t, "lr_period", w, tc.lr_period);
            tc.validation_fraction = get_as<double>(t, "validation_fraction", w, tc.validation_fraction);
        }
        if (spec.type == "external" && spec.command.empty())
            throw ConfigError("objective.type = 'external' requires objective.command");
        if (spec.type == "benchmark" && !find_benchmark(spec.function))
            throw ConfigError("unknown benchmark function '" + spec.function + "'");
    }

    try {
        cfg.gsa.validate();
        cfg.objective.toy.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (cfg.objective.type == "toy-trainer" && cfg.gsa.sense != Sense::minimize)
        throw ConfigError("the toy trainer returns a validation loss; gsa.sense must be 'minimize'");
    return cfg;
}

inline RunConfig config_from_toml(std::string_view text, std::string_view source = "<config>") {
    try {
        const toml::table tbl = toml::parse(text, source);
        return config_from_json(detail::toml_table_to_json(tbl));
    } catch (const toml::parse_error& e) {
        std::ostringstream os;
        os << "TOML parse error: " << e.description() << " (" << e.source() << ")";
        throw ConfigError(os.str());
    }
}

/// Loads a .toml or .json config, chosen by file extension.
inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    const auto ext = path.extension().string();
    if (ext == ".json") {
        nlohmann::ordered_json j;
        try {
            j = nlohmann::ordered_json::parse(text);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("JSON parse error: ") + e.what());
        }
        return config_from_json(j);
    }
    if (ext == ".toml") return config_from_toml(text, path.string());
    throw ConfigError("config file must end in .toml or .json");
}

/// JSON form of a resolved config; loading it back gives the same run.
inline nlohmann::ordered_json config_to_json(const RunConfig& cfg, std::uint64_t seed) {
    nlohmann::ordered_json j;
    const auto& g = cfg.gsa;
    j["gsa"] = {{"population", g.population},   {"max_iterations", g.max_iterations},
                {"g0", g.g0},                   {"tau", g.tau},
                {"g_schedule", to_string(g.g_schedule)}, {"beta", g.beta},
                {"t0_gravity", g.t0_gravity},   {"kbest_final", g.kbest_final},
                {"sense", to_string(g.sense)},  {"seed", seed},
                {"parallelism", cfg.parallelism}};
    nlohmann::ordered_json space = nlohmann::ordered_json::object();
    for (const auto& d : cfg.space.dims()) {
        nlohmann::ordered_json dim = {{"kind", to_string(d.kind)}};
        if (d.kind == DimensionKind::integer) {
            dim["lower"] = static_cast<std::int64_t>(d.lower);
            dim["upper"] = static_cast<std::int64_t>(d.upper);
        } else {
            dim["lower"] = d.lower;
            dim["upper"] = d.upper;
        }
        space[d.name] = std::move(dim);
    }
    j["space"] = std::move(space);
    const auto& o = cfg.objective;
    nlohmann::ordered_json obj = {{"type", o.type}};
    if (o.type == "external") {
        obj["command"] = o.command;
        obj["timeout"] = o.timeout;
    }
    if (o.type == "benchmark") obj["function"] = o.function;
    obj["retries"] = cfg.failure.retries;
    obj["strict"] = cfg.failure.strict;
    obj["penalty_margin"] = cfg.failure.penalty_margin;
    obj["penalty_default"] = cfg.failure.penalty_default;
    if (o.type == "toy-trainer") {
        const auto& t = o.toy;
        obj["toy_trainer"] = {{"dataset_seed", t.dataset_seed}, {"samples_per_class", t.samples_per_class},
                              {"epochs", t.epochs},             {"patience", t.patience},
                              {"lr0", t.lr0},                   {"lr_drop", t.lr_drop},
                              {"lr_period", t.lr_period},       {"validation_fraction", t.validation_fraction}};
    }
    j["objective"] = std::move(obj);
    return j;
}

inline std::shared_ptr<Objective> make_objective(const RunConfig& cfg) {
    const auto& o = cfg.objective;
    if (o.type == "toy-trainer") return std::make_shared<ToyTrainerObjective>(o.toy);
    if (o.type == "external")
        return std::make_shared<ExternalObjective>(o.command, o.timeout, cfg.parallelism, cfg.gsa.sense);
    if (o.type == "benchmark") return make_benchmark_objective(o.function);
    throw ConfigError("unknown objective type '" + o.type + "'");
}

}  // namespace gravopt
