#pragma once

// Strict JSON config reading. Every object is read through a Reader that
// remembers which keys were consumed; finish() rejects anything left over.
// Errors carry the dotted path of the offending field.

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ltpolicy/core.hpp"
#include "ltpolicy/dp.hpp"
#include "ltpolicy/error.hpp"
#include "ltpolicy/policies.hpp"

namespace ltp::config {

using nlohmann::json;

template <class T>
T convert(const json& j, const std::string& field) {
    if constexpr (std::is_same_v<T, bool>) {
        if (!j.is_boolean()) throw ValidationError("expected true or false", field);
        return j.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
        if (!j.is_string()) throw ValidationError("expected a string", field);
        return j.get<std::string>();
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
        if (!j.is_number_unsigned()) throw ValidationError("expected a non-negative integer", field);
        return j.get<std::uint64_t>();
    } else if constexpr (std::is_integral_v<T>) {
        if (!j.is_number_integer()) throw ValidationError("expected an integer", field);
        return j.get<T>();
    } else if constexpr (std::is_floating_point_v<T>) {
        if (!j.is_number()) throw ValidationError("expected a number", field);
        return j.get<T>();
    } else {
        // std::vector<U>
        using U = typename T::value_type;
        if (!j.is_array()) throw ValidationError("expected an array", field);
        T out;
        for (std::size_t i = 0; i < j.size(); ++i)
            out.push_back(convert<U>(j[i], field + "[" + std::to_string(i) + "]"));
        return out;
    }
}

class Reader {
public:
    Reader(const json& j, std::string path) : j_(&j), path_(std::move(path)) {
        if (!j.is_object()) throw ValidationError("expected an object", path_.empty() ? "config" : path_);
    }

    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    bool has(const std::string& key) const { return j_->contains(key); }

    template <class T>
    T get(const std::string& key) {
        if (!has(key)) throw ValidationError("required key is missing", field(key));
        seen_.insert(key);
        return convert<T>(j_->at(key), field(key));
    }

    template <class T>
    T get_or(const std::string& key, T fallback) {
        if (!has(key)) return fallback;
        return get<T>(key);
    }

    template <class T>
    std::optional<T> maybe(const std::string& key) {
        if (!has(key)) return std::nullopt;
        return get<T>(key);
    }

    Reader child(const std::string& key) {
        if (!has(key)) throw ValidationError("required section is missing", field(key));
        seen_.insert(key);
        return Reader(j_->at(key), field(key));
    }

    std::optional<Reader> maybe_child(const std::string& key) {
        if (!has(key)) return std::nullopt;
        return child(key);
    }

    void finish() const {
        for (auto it = j_->begin(); it != j_->end(); ++it)
            if (!seen_.count(it.key())) throw ValidationError("unknown key", field(it.key()));
    }

private:
    const json* j_;
    std::string path_;
    std::set<std::string> seen_;
};

inline json load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read config file '" + path + "'", "--config");
    try {
        return json::parse(in, nullptr, true, /*ignore_comments=*/false);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("invalid JSON: ") + e.what(), path);
    }
}

inline json parse_text(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("invalid JSON: ") + e.what(), "config");
    }
}

struct ModelSection {
    std::vector<double> rates;
    std::vector<double> prices;
    std::optional<double> horizon;
    std::optional<double> alpha;
    std::optional<long> initial_inventory;

    ModelParams instance() const {
        require(horizon.has_value(), "required key is missing", "model.horizon");
        require(alpha.has_value() != initial_inventory.has_value(),
                "give exactly one of alpha and initial_inventory", "model.alpha");
        if (alpha) return ModelParams::from_alpha(rates, prices, *alpha, *horizon);
        return ModelParams(rates, prices, *initial_inventory, *horizon);
    }
};

// prices are optional only where a command never needs them.
inline ModelSection read_model(Reader r, bool need_prices, bool allow_instance) {
    ModelSection m;
    m.rates = r.get<std::vector<double>>("rates");
    require(m.rates.size() >= 2, "need at least two customer classes", r.field("rates"));
    for (double x : m.rates) require(x > 0.0, "arrival rates must be positive", r.field("rates"));
    if (need_prices)
        m.prices = r.get<std::vector<double>>("prices");
    else
        m.prices = r.get_or<std::vector<double>>("prices", {});
    if (!m.prices.empty()) {
        require(m.prices.size() == m.rates.size(), "prices and rates must have the same length",
                r.field("prices"));
        for (std::size_t j = 0; j < m.prices.size(); ++j) {
            require(m.prices[j] > 0.0, "prices must be positive", r.field("prices"));
            if (j > 0)
                require(m.prices[j] < m.prices[j - 1], "prices must be strictly decreasing",
                        r.field("prices"));
        }
    }
    if (allow_instance) {
        m.horizon = r.maybe<double>("horizon");
        m.alpha = r.maybe<double>("alpha");
        m.initial_inventory = r.maybe<long>("initial_inventory");
        if (m.horizon) require(*m.horizon > 0.0, "horizon must be positive", r.field("horizon"));
        if (m.alpha) require(*m.alpha > 0.0, "alpha must be positive", r.field("alpha"));
        if (m.initial_inventory)
            require(*m.initial_inventory >= 1, "initial inventory must be >= 1",
                    r.field("initial_inventory"));
    }
    r.finish();
    return m;
}

struct DpSection {
    double dt = 1e-3;
    long max_inventory = 0;
};

inline ThresholdTable read_inline_table(Reader& r) {
    auto bp = r.get<std::vector<double>>("breakpoints");
    auto values = r.get<std::vector<long>>("values");
    try {
        return ThresholdTable(std::move(bp), std::move(values));
    } catch (const ValidationError& e) {
        throw ValidationError(e.what(), r.field("breakpoints"));
    }
}

// Policy descriptors:
//   {"type": "beta_lt", "beta": b}
//   {"type": "vector_beta_lt", "betas": [...]}
//   {"type": "accept_all"}
//   {"type": "threshold_table", "csv": path}  or inline breakpoints / values
//   {"type": "extrapolated_optimal", "t_cut": c, "slope": s, "breakpoints": [...], "values": [...]}
//   {"type": "extrapolated_optimal", "t_cut": c, "dt": h, "max_inventory": S}  (thresholds computed here)
inline PolicySpec read_policy(Reader r, const std::vector<double>& rates, const std::vector<double>& prices) {
    const auto type = r.get<std::string>("type");
    PolicySpec spec;
    if (type == "beta_lt") {
        const auto beta = r.get<double>("beta");
        require(std::isfinite(beta) && beta > 0.0, "beta must be positive", r.field("beta"));
        spec = BetaLT{beta};
    } else if (type == "vector_beta_lt") {
        spec = VectorBetaLT{r.get<std::vector<double>>("betas")};
    } else if (type == "accept_all") {
        spec = AcceptAll{};
    } else if (type == "threshold_table") {
        if (r.has("csv"))
            spec = ThresholdTable::read_csv_file(r.get<std::string>("csv"));
        else
            spec = read_inline_table(r);
    } else if (type == "extrapolated_optimal") {
        const auto t_cut = r.get_or<double>("t_cut", 100.0);
        require(t_cut > 0.0, "t_cut must be positive", r.field("t_cut"));
        if (r.has("breakpoints")) {
            ExtrapolatedOptimal eo{read_inline_table(r), t_cut, r.get<double>("slope")};
            spec = eo;
        } else {
            DpOptions opt;
            opt.dt = r.get_or<double>("dt", 1e-3);
            opt.max_inventory = r.get_or<long>("max_inventory", 0);
            opt.t_max = t_cut;
            require(opt.dt > 0.0 && opt.dt <= 1e-2, "dt must lie in (0, 1e-2]", r.field("dt"));
            require(rates.size() == 2, "extrapolated optimal needs two classes", "model.rates");
            const ModelParams base(rates, prices, 1, t_cut);
            spec = build_eo(compute_optimal_thresholds(base, opt), t_cut);
        }
    } else {
        throw ValidationError("unknown policy type '" + type +
                                  "' (expected beta_lt, vector_beta_lt, accept_all, "
                                  "threshold_table or extrapolated_optimal)",
                              r.field("type"));
    }
    r.finish();
    return spec;
}

inline json policy_to_json(const PolicySpec& spec) {
    json j{{"type", policy_kind(spec)}};
    std::visit(
        [&](const auto& s) {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, BetaLT>) j["beta"] = s.beta;
            else if constexpr (std::is_same_v<S, VectorBetaLT>) j["betas"] = s.betas;
            else if constexpr (std::is_same_v<S, ThresholdTable>) {
                j["breakpoints"] = s.breakpoints();
                j["values"] = s.values();
            } else if constexpr (std::is_same_v<S, ExtrapolatedOptimal>) {
                j["t_cut"] = s.t_cut;
                j["slope"] = s.slope;
                j["breakpoints"] = s.base.breakpoints();
                j["values"] = s.base.values();
            }
        },
        spec);
    return j;
}

}  // namespace ltp::config
