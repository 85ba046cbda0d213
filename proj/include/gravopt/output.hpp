#pragma once

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "gsa.hpp"
#include "metrics.hpp"

namespace gravopt {

inline constexpr const char* version_string = "0.1.0";

namespace detail {
inline std::string fmt_double(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}
}  // namespace detail

/// t,g,best_fitness,worst_fitness,kbest,best_position_0..d-1; one row per iteration.
inline void write_history_csv(std::ostream& os, const RunResult& result, std::size_t dims) {
    os << "t,g,best_fitness,worst_fitness,kbest";
    for (std::size_t d = 0; d < dims; ++d) os << ",best_position_" << d;
    os << '\n';
    for (const auto& r : result.history) {
        os << r.t << ',' << detail::fmt_double(r.g) << ',' << detail::fmt_double(r.best_fitness) << ','
           << detail::fmt_double(r.worst_fitness) << ',' << r.kbest;
        for (double x : r.best_position) os << ',' << detail::fmt_double(x);
        os << '\n';
    }
}

inline void write_evaluations_csv(std::ostream& os, const RunResult& result, const SearchSpace& space) {
    for (const auto& d : space.dims()) os << d.name << ',';
    os << "fitness,duration,cache_hit,attempt,penalized,error\n";
    for (const auto& e : result.log) {
        for (const auto& p : e.params) {
            if (p.is_integer())
                os << std::get<std::int64_t>(p.value) << ',';
            else
                os << detail::fmt_double(std::get<double>(p.value)) << ',';
        }
        std::string err = e.error;
        for (char& c : err)
            if (c == ',' || c == '\n' || c == '"') c = ' ';
        os << detail::fmt_double(e.fitness) << ',' << e.duration << ',' << (e.cache_hit ? 1 : 0) << ',' << e.attempt
           << ',' << (e.penalized ? 1 : 0) << ',' << err << '\n';
    }
}

inline nlohmann::ordered_json params_to_json(const ParamVector& params) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& p : params) {
        if (p.is_integer())
            j[p.name] = std::get<std::int64_t>(p.value);
        else
            j[p.name] = std::get<double>(p.value);
    }
    return j;
}

inline nlohmann::ordered_json result_to_json(const RunResult& result, std::uint64_t seed) {
    return {{"best_params", params_to_json(result.best_params)},
            {"best_fitness", result.best_fitness},
            {"evaluations", result.evaluations},
            {"seed", seed}};
}

inline nlohmann::ordered_json report_to_json(const metrics::ClassReport& rep) {
    auto cls = [](const metrics::ClassMetrics& c) {
        return nlohmann::ordered_json{{"precision", c.precision}, {"recall", c.recall}, {"f1", c.f1},
                                      {"support", c.support},     {"degenerate", c.degenerate}};
    };
    auto avg = [](const metrics::Averages& a) {
        return nlohmann::ordered_json{{"precision", a.precision}, {"recall", a.recall}, {"f1", a.f1}};
    };
    return {{"confusion_matrix", {{"tp", rep.matrix.tp}, {"tn", rep.matrix.tn}, {"fp", rep.matrix.fp}, {"fn", rep.matrix.fn}}},
            {"negative", cls(rep.negative)},
            {"positive", cls(rep.positive)},
            {"accuracy", rep.accuracy},
            {"error_rate", rep.error_rate},
            {"macro_avg", avg(rep.macro_avg)},
            {"weighted_avg", avg(rep.weighted_avg)}};
}

inline std::string utc_timestamp(std::chrono::system_clock::time_point tp, const char* fmt = "%Y-%m-%dT%H:%M:%SZ") {
    const std::time_t t = std::chrono::system_clock::to_time_t(tp);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[64];
    std::strftime(buf, sizeof buf, fmt, &tm);
    return buf;
}

/// Creates <out_dir>/<UTC timestamp>-seed<seed>[-n]; an existing directory is never reused.
inline std::filesystem::path make_run_dir(const std::filesystem::path& out_dir, std::uint64_t seed) {
    std::filesystem::create_directories(out_dir);
    const std::string base = utc_timestamp(std::chrono::system_clock::now(), "%Y%m%dT%H%M%SZ") + "-seed" + std::to_string(seed);
    for (int n = 0;; ++n) {
        auto candidate = out_dir / (n == 0 ? base : base + "-" + std::to_string(n));
        if (std::filesystem::create_directory(candidate)) return candidate;
    }
}

struct Manifest {
    nlohmann::ordered_json config;
    std::string started;
    std::string finished;
    std::uint64_t seed = 0;
    bool completed = false;
    std::string command;
    std::string error;
};

inline nlohmann::ordered_json manifest_to_json(const Manifest& m) {
    nlohmann::ordered_json j = {{"tool", "gravopt"},
                                {"version", version_string},
                                {"command", m.command},
                                {"seed", m.seed},
                                {"started", m.started},
                                {"finished", m.finished},
                                {"outcome", m.completed ? "completed" : "aborted"},
                                {"config", m.config}};
    if (!m.error.empty()) j["error"] = m.error;
    return j;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
}

/// Writes history.csv, evaluations.csv, result.json (completed runs) and manifest.json.
inline void persist_run(const std::filesystem::path& dir, const RunResult& result, const SearchSpace& space,
                        const Manifest& manifest) {
    {
        std::ofstream h(dir / "history.csv");
        write_history_csv(h, result, space.size());
    }
    {
        std::ofstream e(dir / "evaluations.csv");
        write_evaluations_csv(e, result, space);
    }
    if (manifest.completed) write_text(dir / "result.json", result_to_json(result, manifest.seed).dump(2) + "\n");
    write_text(dir / "manifest.json", manifest_to_json(manifest).dump(2) + "\n");
}

}  // namespace gravopt
