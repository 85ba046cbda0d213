#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <variant>
#include <vector>

#include "random.hpp"

namespace gravopt {

class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class SpaceError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class DimensionKind { continuous, integer };

inline const char* to_string(DimensionKind kind) {
    return kind == DimensionKind::integer ? "integer" : "continuous";
}

struct Dimension {
    std::string name;
    DimensionKind kind = DimensionKind::continuous;
    double lower = 0.0;
    double upper = 1.0;

    bool operator==(const Dimension&) const = default;
};

using Position = std::vector<double>;

// One decoded hyperparameter. Integer dimensions hold int64, continuous ones double.
struct Param {
    std::string name;
    std::variant<std::int64_t, double> value;

    bool is_integer() const { return std::holds_alternative<std::int64_t>(value); }

    double as_double() const {
        return is_integer() ? static_cast<double>(std::get<std::int64_t>(value))
                            : std::get<double>(value);
    }

    bool operator==(const Param& other) const {
        if (name != other.name || is_integer() != other.is_integer()) return false;
        if (is_integer()) return std::get<std::int64_t>(value) == std::get<std::int64_t>(other.value);
        // bit equality: the cache and determinism checks want exactly this
        return std::bit_cast<std::uint64_t>(std::get<double>(value)) ==
               std::bit_cast<std::uint64_t>(std::get<double>(other.value));
    }
};

class ParamVector {
public:
    ParamVector() = default;
    explicit ParamVector(std::vector<Param> entries) : entries_(std::move(entries)) {}

    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    auto begin() const { return entries_.begin(); }
    auto end() const { return entries_.end(); }
    const Param& operator[](std::size_t i) const { return entries_[i]; }

    const Param* find(std::string_view name) const {
        auto it = std::find_if(entries_.begin(), entries_.end(),
                               [&](const Param& p) { return p.name == name; });
        return it == entries_.end() ? nullptr : &*it;
    }

    const Param& at(std::string_view name) const {
        if (const Param* p = find(name)) return *p;
        throw std::out_of_range("no parameter named '" + std::string(name) + "'");
    }

    // Exact key: integers by value, reals by bit pattern.
    std::vector<std::uint64_t> key() const {
        std::vector<std::uint64_t> out;
        out.reserve(entries_.size());
        for (const auto& p : entries_) {
            out.push_back(p.is_integer()
                              ? static_cast<std::uint64_t>(std::get<std::int64_t>(p.value))
                              : std::bit_cast<std::uint64_t>(std::get<double>(p.value)));
        }
        return out;
    }

    bool operator==(const ParamVector&) const = default;

private:
    std::vector<Param> entries_;
};

/// Ordered, bounded box of named dimensions. Its size is the dimension of the
/// optimizer's position space.
class SearchSpace {
public:
    SearchSpace() = default;

    explicit SearchSpace(std::vector<Dimension> dims) : dims_(std::move(dims)) {
        if (dims_.empty()) throw SpaceError("search space needs at least one dimension");
        std::unordered_set<std::string> seen;
        for (const auto& d : dims_) {
            if (d.name.empty()) throw SpaceError("dimension name must not be empty");
            if (!seen.insert(d.name).second)
                throw SpaceError("duplicate dimension name '" + d.name + "'");
            if (!std::isfinite(d.lower) || !std::isfinite(d.upper) || !(d.lower < d.upper))
                throw SpaceError("dimension '" + d.name + "' needs finite lower < upper");
            if (d.kind == DimensionKind::integer &&
                (std::trunc(d.lower) != d.lower || std::trunc(d.upper) != d.upper))
                throw SpaceError("integer dimension '" + d.name + "' needs whole-number bounds");
        }
    }

    /// batch_size [1,64], dropout_rate [0.1,0.9], neurons [neurons_lower,500].
    static SearchSpace hyperparameter_default(double neurons_lower = 50.0) {
        return SearchSpace({
            {"batch_size", DimensionKind::integer, 1.0, 64.0},
            {"dropout_rate", DimensionKind::continuous, 0.1, 0.9},
            {"neurons", DimensionKind::integer, neurons_lower, 500.0},
        });
    }

    std::size_t size() const { return dims_.size(); }
    const std::vector<Dimension>& dims() const { return dims_; }
    const Dimension& operator[](std::size_t i) const { return dims_[i]; }

    bool operator==(const SearchSpace&) const = default;

private:
    std::vector<Dimension> dims_;
};

namespace detail {
inline void check_length(const SearchSpace& space, std::size_t n) {
    if (n != space.size())
        throw DimensionError("position has " + std::to_string(n) + " coordinates, space has " +
                             std::to_string(space.size()));
}
}  // namespace detail

template <UnitSource R>
Position sample_uniform(const SearchSpace& space, R& rng) {
    Position p(space.size());
    for (std::size_t j = 0; j < space.size(); ++j) {
        const auto& d = space[j];
        p[j] = std::clamp(d.lower + (d.upper - d.lower) * static_cast<double>(rng()), d.lower, d.upper);
    }
    return p;
}

inline Position clamp(const SearchSpace& space, std::span<const double> position) {
    detail::check_length(space, position.size());
    Position out(position.begin(), position.end());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = std::clamp(out[j], space[j].lower, space[j].upper);
    return out;
}

inline bool contains(const SearchSpace& space, std::span<const double> position) {
    if (position.size() != space.size()) return false;
    for (std::size_t j = 0; j < position.size(); ++j)
        if (!(position[j] >= space[j].lower && position[j] <= space[j].upper)) return false;
    return true;
}

/// Continuous coordinates pass through; integer ones are rounded half away from
/// zero and re-clamped. Callers clamp out-of-bounds positions first.
inline ParamVector decode(const SearchSpace& space, std::span<const double> position) {
    detail::check_length(space, position.size());
    std::vector<Param> params;
    params.reserve(space.size());
    for (std::size_t j = 0; j < space.size(); ++j) {
        const auto& d = space[j];
        if (d.kind == DimensionKind::integer) {
            const double r = std::clamp(std::round(position[j]), d.lower, d.upper);
            params.push_back({d.name, static_cast<std::int64_t>(r)});
        } else {
            params.push_back({d.name, position[j]});
        }
    }
    return ParamVector(std::move(params));
}

inline Position encode(const SearchSpace& space, const ParamVector& params) {
    Position p(space.size());
    for (std::size_t j = 0; j < space.size(); ++j) p[j] = params.at(space[j].name).as_double();
    return p;
}

}  // namespace gravopt
