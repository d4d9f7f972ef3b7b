#pragma once

// Noise families used in the simulations (all symmetric about zero, so the
// median condition G(0) = 1/2 holds), additive outlier contamination, and the
// density at zero g(0) that scales the LAD asymptotic covariance.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lad2d/error.hpp"
#include "lad2d/format.hpp"
#include "lad2d/model.hpp"
#include "lad2d/rng.hpp"

namespace lad2d {

enum class NoiseFamily { None, Gaussian, StudentT1, SlashNormal };

struct Contamination {
    double fraction = 0.0;
    /// Empty means "auto": 10 * max_k sqrt(A_k^2 + B_k^2) of the clean signal.
    std::optional<double> offset;

    friend bool operator==(const Contamination&, const Contamination&) = default;
};

struct NoiseSpec {
    NoiseFamily family = NoiseFamily::None;
    double sigma = 1.0;  ///< Gaussian only
    std::optional<Contamination> contamination;

    static NoiseSpec none() { return {}; }
    static NoiseSpec gaussian(double sigma) { return {NoiseFamily::Gaussian, sigma, std::nullopt}; }
    static NoiseSpec t1() { return {NoiseFamily::StudentT1, 1.0, std::nullopt}; }
    static NoiseSpec slash() { return {NoiseFamily::SlashNormal, 1.0, std::nullopt}; }

    NoiseSpec with_outliers(double fraction, std::optional<double> offset = std::nullopt) const {
        NoiseSpec n = *this;
        n.contamination = Contamination{fraction, offset};
        return n;
    }

    friend bool operator==(const NoiseSpec&, const NoiseSpec&) = default;
};

inline void validate(const NoiseSpec& spec) {
    if (spec.family == NoiseFamily::Gaussian && !(spec.sigma > 0.0 && std::isfinite(spec.sigma)))
        throw InvalidArgument("gaussian noise requires sigma > 0");
    if (spec.contamination) {
        const auto& c = *spec.contamination;
        if (!(c.fraction >= 0.0 && c.fraction < 1.0)) throw InvalidArgument("outlier fraction must be in [0, 1)");
        if (c.offset && !std::isfinite(*c.offset)) throw InvalidArgument("outlier offset must be finite");
    }
}

/// Textual form: `none`, `gaussian:sigma=0.1`, `t1`, `slash`, each with an
/// optional `+outliers:frac=0.2,offset=auto` (or a numeric offset).
inline NoiseSpec parse_noise_spec(std::string_view text) {
    text = trim(text);
    NoiseSpec spec;
    std::string_view base = text, extra;
    if (const auto plus = text.find('+'); plus != std::string_view::npos) {
        base = text.substr(0, plus);
        extra = text.substr(plus + 1);
    }
    if (base == "none") {
        spec.family = NoiseFamily::None;
    } else if (base == "t1") {
        spec.family = NoiseFamily::StudentT1;
    } else if (base == "slash") {
        spec.family = NoiseFamily::SlashNormal;
    } else if (base.starts_with("gaussian")) {
        spec.family = NoiseFamily::Gaussian;
        constexpr std::string_view key = "gaussian:sigma=";
        if (!base.starts_with(key)) throw InvalidArgument("gaussian noise needs the form gaussian:sigma=<value>");
        spec.sigma = parse_real(base.substr(key.size()));
    } else {
        throw InvalidArgument("unknown noise family: '" + std::string(base) + "'");
    }

    if (!extra.empty()) {
        constexpr std::string_view key = "outliers:";
        if (!extra.starts_with(key)) throw InvalidArgument("expected '+outliers:...' in noise spec");
        extra.remove_prefix(key.size());
        Contamination c;
        bool have_frac = false;
        while (!extra.empty()) {
            const auto comma = extra.find(',');
            const auto item = extra.substr(0, comma);
            extra = comma == std::string_view::npos ? std::string_view{} : extra.substr(comma + 1);
            const auto eq = item.find('=');
            if (eq == std::string_view::npos) throw InvalidArgument("outlier option without '=': " + std::string(item));
            const auto k = item.substr(0, eq), v = item.substr(eq + 1);
            if (k == "frac") {
                c.fraction = parse_real(v);
                have_frac = true;
            } else if (k == "offset") {
                c.offset = v == "auto" ? std::nullopt : std::optional<double>(parse_real(v));
            } else {
                throw InvalidArgument("unknown outlier option: " + std::string(k));
            }
        }
        if (!have_frac) throw InvalidArgument("outlier spec needs frac=<value>");
        spec.contamination = c;
    }
    validate(spec);
    return spec;
}

inline std::string to_string(const NoiseSpec& spec) {
    std::string s;
    switch (spec.family) {
        case NoiseFamily::None: s = "none"; break;
        case NoiseFamily::Gaussian: s = "gaussian:sigma=" + format_real(spec.sigma); break;
        case NoiseFamily::StudentT1: s = "t1"; break;
        case NoiseFamily::SlashNormal: s = "slash"; break;
    }
    if (spec.contamination) {
        s += "+outliers:frac=" + format_real(spec.contamination->fraction) + ",offset=" +
             (spec.contamination->offset ? format_real(*spec.contamination->offset) : std::string("auto"));
    }
    return s;
}

/// One draw from the base family (contamination is applied separately).
inline double draw_noise(const NoiseSpec& spec, Xoshiro256& rng) {
    switch (spec.family) {
        case NoiseFamily::None: return 0.0;
        case NoiseFamily::Gaussian: return spec.sigma * rng.normal();
        case NoiseFamily::StudentT1: {
            // Cauchy(0,1) as the ratio of two independent standard normals.
            double den;
            const double num = rng.normal();
            do den = rng.normal();
            while (den == 0.0);
            return num / den;
        }
        case NoiseFamily::SlashNormal: {
            const double z = rng.normal();
            return z / rng.uniform_open();
        }
    }
    return 0.0;
}

/// T*S i.i.d. draws from the base family, row-major, deterministic in the seed.
inline SignalField sample_noise(const NoiseSpec& spec, const Grid& grid, RngSeed seed) {
    validate(spec);
    SignalField field(grid);
    if (spec.family == NoiseFamily::None) return field;
    Xoshiro256 rng(seed);
    for (auto& v : field.values()) v = draw_noise(spec, rng);
    return field;
}

/// Adds `offset` at floor(fraction * T * S) distinct positions chosen
/// uniformly without replacement (partial Fisher-Yates).
inline SignalField contaminate(const SignalField& field, double fraction, double offset, RngSeed seed) {
    if (!(fraction >= 0.0 && fraction < 1.0)) throw InvalidArgument("outlier fraction must be in [0, 1)");
    if (!std::isfinite(offset)) throw InvalidArgument("outlier offset must be finite");
    SignalField out = field;
    const std::size_t n = field.size();
    const auto count = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
    if (count == 0) return out;
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Xoshiro256 rng(seed);
    for (std::size_t i = 0; i < count; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.below(n - i));
        std::swap(idx[i], idx[j]);
        out.values()[idx[i]] += offset;
    }
    return out;
}

/// "A large constant" for contamination: 10 * max_k sqrt(A_k^2 + B_k^2).
inline double auto_outlier_offset(const ModelParams& truth) {
    double m = 0.0;
    for (const auto& c : truth.components) m = std::max(m, c.magnitude());
    return 10.0 * m;
}

inline double resolved_outlier_offset(const Contamination& c, const ModelParams& truth) {
    return c.offset ? *c.offset : auto_outlier_offset(truth);
}

/// Noise g(0) of the base family; contamination is not reflected.
inline double density_at_zero(const NoiseSpec& spec) {
    validate(spec);
    switch (spec.family) {
        case NoiseFamily::None: throw InvalidArgument("noiseless model has no density");
        case NoiseFamily::Gaussian: return 1.0 / (spec.sigma * std::sqrt(2.0 * std::numbers::pi));
        case NoiseFamily::StudentT1: return std::numbers::inv_pi;
        case NoiseFamily::SlashNormal: return 1.0 / (2.0 * std::sqrt(2.0 * std::numbers::pi));
    }
    return 0.0;
}

/// y = signal(truth) + noise(seed) [+ outliers drawn from a separate stream],
/// so the same seed with and without contamination shares its noise draws.
inline SignalField simulate_observation(const ModelParams& truth, const Grid& grid, const NoiseSpec& noise,
                                        RngSeed seed) {
    validate(grid);
    SignalField y = sample_noise(noise, grid, seed);
    detail::accumulate_model(truth, y);
    if (noise.contamination && noise.contamination->fraction > 0.0) {
        const double offset = resolved_outlier_offset(*noise.contamination, truth);
        y = contaminate(y, noise.contamination->fraction, offset, derive_seed(seed, 0xC0FFEE));
    }
    return y;
}

}  // namespace lad2d
