#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace gravopt::metrics {

class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class Class { negative, positive };

struct ConfusionMatrix {
    std::uint64_t tp = 0;
    std::uint64_t tn = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;

    std::uint64_t total() const { return tp + tn + fp + fn; }

    // view with the negative class playing the positive role
    ConfusionMatrix swapped() const { return {tn, tp, fn, fp}; }

    ConfusionMatrix as_seen_by(Class c) const { return c == Class::positive ? *this : swapped(); }

    bool operator==(const ConfusionMatrix&) const = default;
};

/// Any label equal to `positive_label` is positive, everything else negative.
/// More than two distinct labels across both lists is rejected.
inline ConfusionMatrix confusion(const std::vector<std::string>& y_true, const std::vector<std::string>& y_pred,
                                 const std::string& positive_label) {
    if (y_true.size() != y_pred.size()) throw InputError("label lists differ in length");
    if (y_true.empty()) throw InputError("label lists are empty");
    std::set<std::string> distinct(y_true.begin(), y_true.end());
    distinct.insert(y_pred.begin(), y_pred.end());
    if (distinct.size() > 2) throw InputError("more than two distinct labels; only binary classification is supported");

    ConfusionMatrix cm;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const bool t = y_true[i] == positive_label;
        const bool p = y_pred[i] == positive_label;
        if (t && p) ++cm.tp;
        else if (!t && !p) ++cm.tn;
        else if (!t && p) ++cm.fp;
        else ++cm.fn;
    }
    return cm;
}

struct Value {
    double value = 0.0;
    bool degenerate = false;  // denominator was zero; value set to 0 by convention
};

namespace detail {
inline Value ratio(std::uint64_t num, std::uint64_t den) {
    if (den == 0) return {0.0, true};
    return {static_cast<double>(num) / static_cast<double>(den), false};
}
inline void require_total(const ConfusionMatrix& cm) {
    if (cm.total() == 0) throw InputError("confusion matrix is empty");
}
}  // namespace detail

inline double accuracy(const ConfusionMatrix& cm) {
    detail::require_total(cm);
    return static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
}

inline double error_rate(const ConfusionMatrix& cm) { return 1.0 - accuracy(cm); }

inline Value precision(const ConfusionMatrix& cm, Class c) {
    const auto m = cm.as_seen_by(c);
    return detail::ratio(m.tp, m.tp + m.fp);
}

inline Value recall(const ConfusionMatrix& cm, Class c) {
    const auto m = cm.as_seen_by(c);
    return detail::ratio(m.tp, m.tp + m.fn);
}

inline Value f1(const ConfusionMatrix& cm, Class c) {
    const auto p = precision(cm, c);
    const auto r = recall(cm, c);
    const double den = p.value + r.value;
    if (den == 0.0) return {0.0, true};
    return {2.0 * p.value * r.value / den, p.degenerate || r.degenerate};
}

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::uint64_t support = 0;
    bool degenerate = false;
};

struct Averages {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct ClassReport {
    ConfusionMatrix matrix;
    ClassMetrics negative;
    ClassMetrics positive;
    double accuracy = 0.0;
    double error_rate = 0.0;
    Averages macro_avg;
    Averages weighted_avg;
};

inline ClassMetrics class_metrics(const ConfusionMatrix& cm, Class c) {
    const auto m = cm.as_seen_by(c);
    const auto p = precision(cm, c), r = recall(cm, c), f = f1(cm, c);
    return {p.value, r.value, f.value, m.tp + m.fn, p.degenerate || r.degenerate || f.degenerate};
}

inline ClassReport report(const ConfusionMatrix& cm) {
    detail::require_total(cm);
    ClassReport rep;
    rep.matrix = cm;
    rep.negative = class_metrics(cm, Class::negative);
    rep.positive = class_metrics(cm, Class::positive);
    rep.accuracy = accuracy(cm);
    rep.error_rate = 1.0 - rep.accuracy;

    const auto& n = rep.negative;
    const auto& p = rep.positive;
    rep.macro_avg = {(n.precision + p.precision) / 2.0, (n.recall + p.recall) / 2.0, (n.f1 + p.f1) / 2.0};

    const double total = static_cast<double>(cm.total());
    const double wn = static_cast<double>(n.support) / total;
    const double wp = static_cast<double>(p.support) / total;
    rep.weighted_avg = {wn * n.precision + wp * p.precision, wn * n.recall + wp * p.recall, wn * n.f1 + wp * p.f1};
    return rep;
}

/// Integer percent, half away from zero.
inline long percent(double fraction) { return std::lround(fraction * 100.0); }

inline std::string format_table(const ClassReport& rep) {
    std::ostringstream os;
    auto row = [&](const std::string& name, double p, double r, double f) {
        os << std::left << std::setw(18) << name << std::right << std::setw(10) << (std::to_string(percent(p)) + "%")
           << std::setw(10) << (std::to_string(percent(r)) + "%") << std::setw(10) << (std::to_string(percent(f)) + "%")
           << '\n';
    };
    os << std::left << std::setw(18) << "Categories" << std::right << std::setw(10) << "Precision" << std::setw(10)
       << "Recall" << std::setw(10) << "F1 score" << '\n';
    row("Negative", rep.negative.precision, rep.negative.recall, rep.negative.f1);
    row("Positive", rep.positive.precision, rep.positive.recall, rep.positive.f1);
    row("Macro Average", rep.macro_avg.precision, rep.macro_avg.recall, rep.macro_avg.f1);
    row("Weighted Average", rep.weighted_avg.precision, rep.weighted_avg.recall, rep.weighted_avg.f1);
    os << '\n'
       << "Accuracy: " << percent(rep.accuracy) << "%  Error rate: " << percent(rep.error_rate) << "%\n"
       << "Confusion matrix (rows true, cols predicted; negative, positive):\n"
       << "  negative " << std::setw(6) << rep.matrix.tn << std::setw(6) << rep.matrix.fp << '\n'
       << "  positive " << std::setw(6) << rep.matrix.fn << std::setw(6) << rep.matrix.tp << '\n';
    return os.str();
}

struct LabelColumns {
    std::vector<std::string> y_true;
    std::vector<std::string> y_pred;
};

namespace detail {
inline std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}
inline std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}
}  // namespace detail

/// Two-column CSV with the header `true_label,predicted_label`. Blank lines are
/// skipped; anything else that is not exactly two non-empty fields is an error.
inline LabelColumns read_label_csv(std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    bool header = false;
    LabelColumns out;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
            throw InputError("line " + std::to_string(lineno) + ": expected exactly two comma-separated fields");
        const auto a = detail::trim(line.substr(0, comma));
        const auto b = detail::trim(line.substr(comma + 1));
        if (!header) {
            if (detail::lower(a) != "true_label" || detail::lower(b) != "predicted_label")
                throw InputError("missing header 'true_label,predicted_label'");
            header = true;
            continue;
        }
        if (a.empty() || b.empty()) throw InputError("line " + std::to_string(lineno) + ": empty label");
        out.y_true.push_back(a);
        out.y_pred.push_back(b);
    }
    if (!header) throw InputError("missing header 'true_label,predicted_label'");
    if (out.y_true.empty()) throw InputError("no data rows");
    return out;
}

}  // namespace gravopt::metrics
