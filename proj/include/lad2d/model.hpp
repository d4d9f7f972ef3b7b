#pragma once

// Superimposed 2-D sinusoidal model: parameter types, noiseless synthesis,
// the plain-text signal matrix format, and the normalized trigonometric sums
// whose limits drive the asymptotic theory.

#include <cmath>
#include <complex>
#include <cstddef>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "lad2d/error.hpp"
#include "lad2d/format.hpp"

namespace lad2d {

inline constexpr double kDefaultAmplitudeBound = 1e6;

/// One sinusoid A cos(lambda t + mu s) + B sin(lambda t + mu s).
struct ComponentParams {
    double A = 0.0;
    double B = 0.0;
    double lambda = 0.0;  ///< radians per row index, in [0, pi]
    double mu = 0.0;      ///< radians per column index, in [0, pi]

    double magnitude() const { return std::hypot(A, B); }
    double power() const { return A * A + B * B; }

    friend bool operator==(const ComponentParams&, const ComponentParams&) = default;
};

/// Ordered list of p >= 1 components. Order is the caller's; reports may
/// reorder for display.
struct ModelParams {
    std::vector<ComponentParams> components;

    ModelParams() = default;
    ModelParams(std::initializer_list<ComponentParams> c) : components(c) {}
    explicit ModelParams(std::vector<ComponentParams> c) : components(std::move(c)) {}

    std::size_t order() const { return components.size(); }
    const ComponentParams& operator[](std::size_t k) const { return components[k]; }
    ComponentParams& operator[](std::size_t k) { return components[k]; }

    /// Flat theta vector (A1, B1, lambda1, mu1, ..., Ap, Bp, lambdap, mup).
    std::vector<double> to_vector() const {
        std::vector<double> v;
        v.reserve(4 * components.size());
        for (const auto& c : components) v.insert(v.end(), {c.A, c.B, c.lambda, c.mu});
        return v;
    }

    static ModelParams from_vector(const std::vector<double>& v) {
        if (v.size() % 4 != 0 || v.empty())
            throw InvalidArgument("parameter vector length must be a positive multiple of 4");
        ModelParams m;
        for (std::size_t i = 0; i < v.size(); i += 4) m.components.push_back({v[i], v[i + 1], v[i + 2], v[i + 3]});
        return m;
    }

    /// Sum of component magnitudes; bounds |evaluate_model| everywhere.
    double total_magnitude() const {
        double m = 0.0;
        for (const auto& c : components) m += c.magnitude();
        return m;
    }

    friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Throws InvalidArgument unless the parameters lie in the compact box
/// (K x K x [0,pi] x [0,pi])^p with K = [-amplitude_bound, amplitude_bound]
/// and no two components share a frequency pair.
inline void validate(const ModelParams& params, double amplitude_bound = kDefaultAmplitudeBound) {
    if (params.components.empty()) throw InvalidArgument("model must have at least one component");
    for (std::size_t k = 0; k < params.order(); ++k) {
        const auto& c = params[k];
        if (!std::isfinite(c.A) || !std::isfinite(c.B) || std::abs(c.A) > amplitude_bound ||
            std::abs(c.B) > amplitude_bound)
            throw InvalidArgument("component " + std::to_string(k + 1) + ": amplitude outside the bounded set");
        if (!(c.lambda >= 0.0 && c.lambda <= std::numbers::pi) || !(c.mu >= 0.0 && c.mu <= std::numbers::pi))
            throw InvalidArgument("component " + std::to_string(k + 1) + ": frequency outside [0, pi]");
        for (std::size_t j = 0; j < k; ++j)
            if (params[j].lambda == c.lambda && params[j].mu == c.mu)
                throw InvalidArgument("components " + std::to_string(j + 1) + " and " + std::to_string(k + 1) +
                                      " share the same frequency pair");
    }
}

struct Grid {
    int T = 0;  ///< rows, t = 1..T
    int S = 0;  ///< columns, s = 1..S

    std::size_t size() const { return static_cast<std::size_t>(T) * static_cast<std::size_t>(S); }
    friend bool operator==(const Grid&, const Grid&) = default;
};

inline void validate(const Grid& g) {
    if (g.T < 2 || g.S < 2) throw InvalidArgument("grid must be at least 2x2");
}

/// T x S observations, row-major, addressed with 1-based (t, s).
class SignalField {
public:
    SignalField() = default;
    explicit SignalField(Grid grid, double fill = 0.0) : grid_(grid), values_(grid.size(), fill) { validate(grid_); }
    SignalField(Grid grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
        validate(grid_);
        if (values_.size() != grid_.size()) throw InvalidArgument("field values do not match the grid size");
    }

    const Grid& grid() const { return grid_; }
    int rows() const { return grid_.T; }
    int cols() const { return grid_.S; }
    std::size_t size() const { return values_.size(); }

    double& operator()(int t, int s) { return values_[index(t, s)]; }
    double operator()(int t, int s) const { return values_[index(t, s)]; }

    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }

    friend bool operator==(const SignalField&, const SignalField&) = default;

private:
    std::size_t index(int t, int s) const {
        return static_cast<std::size_t>(t - 1) * static_cast<std::size_t>(grid_.S) + static_cast<std::size_t>(s - 1);
    }

    Grid grid_{};
    std::vector<double> values_;
};

inline void require_same_grid(const SignalField& a, const Grid& g) {
    if (!(a.grid() == g)) throw InvalidArgument("grid mismatch");
}

inline double evaluate_model(const ModelParams& params, int t, int s) {
    double y = 0.0;
    for (const auto& c : params.components) {
        const double phase = c.lambda * t + c.mu * s;
        y += c.A * std::cos(phase) + c.B * std::sin(phase);
    }
    return y;
}

namespace detail {

/// e^{i f n} for n = 1..count.
inline std::vector<std::complex<double>> phasors(double f, int count) {
    std::vector<std::complex<double>> out(static_cast<std::size_t>(count));
    for (int n = 1; n <= count; ++n) out[n - 1] = std::polar(1.0, f * n);
    return out;
}

/// Adds the model to `out` (or subtracts when sign = -1). Uses
/// A cos x + B sin x = Re[(A - iB) e^{i lambda t} e^{i mu s}] so each grid
/// point costs one complex product per component instead of two trig calls.
inline void accumulate_model(const ModelParams& params, SignalField& out, double sign = 1.0) {
    const int T = out.rows(), S = out.cols();
    auto& v = out.values();
    for (const auto& c : params.components) {
        const auto rows = phasors(c.lambda, T);
        const auto cols = phasors(c.mu, S);
        const std::complex<double> amp(sign * c.A, -sign * c.B);
        for (int t = 0; t < T; ++t) {
            const auto ct = amp * rows[t];
            const double re = ct.real(), im = ct.imag();
            double* row = v.data() + static_cast<std::size_t>(t) * S;
            for (int s = 0; s < S; ++s) row[s] += re * cols[s].real() - im * cols[s].imag();
        }
    }
}

}  // namespace detail

inline SignalField synthesize_signal(const ModelParams& params, const Grid& grid) {
    SignalField field(grid);
    detail::accumulate_model(params, field);
    return field;
}

enum class TrigKind { Cos2, Sin2, Cos, Sin, SinCos };

/// (1 / (T^{k1+1} S^{k2+1})) sum_t sum_s t^k1 s^k2 f(theta1 t + theta2 s).
///
/// Evaluated separably: with C(a, b) = (sum_t t^k1 e^{iat})(sum_s s^k2 e^{ibs}),
/// cos -> Re C(th), sin -> Im C(th), cos^2 -> (P + Re C(2th)) / 2,
/// sin^2 -> (P - Re C(2th)) / 2, sin cos -> Im C(2th) / 2, where P is the
/// plain weight sum. O(T + S) instead of O(TS).
inline double trig_sum(TrigKind kind, int k1, int k2, double theta1, double theta2, const Grid& grid) {
    validate(grid);
    if (k1 < 0 || k1 > 2 || k2 < 0 || k2 > 2) throw InvalidArgument("trig_sum: powers must be in {0,1,2}");
    if (!(theta1 > 0.0 && theta1 < std::numbers::pi) || !(theta2 > 0.0 && theta2 < std::numbers::pi))
        throw InvalidArgument("trig_sum: frequencies must lie in the open interval (0, pi)");

    const bool doubled = kind == TrigKind::Cos2 || kind == TrigKind::Sin2 || kind == TrigKind::SinCos;
    const double f1 = doubled ? 2.0 * theta1 : theta1;
    const double f2 = doubled ? 2.0 * theta2 : theta2;

    auto weighted = [](double f, int k, int n, double& plain) {
        std::complex<double> acc = 0.0;
        plain = 0.0;
        for (int i = 1; i <= n; ++i) {
            const double w = std::pow(static_cast<double>(i), k);
            plain += w;
            acc += w * std::polar(1.0, f * i);
        }
        return acc;
    };
    double p1 = 0.0, p2 = 0.0;
    const auto c = weighted(f1, k1, grid.T, p1) * weighted(f2, k2, grid.S, p2);
    const double plain = p1 * p2;

    double sum = 0.0;
    switch (kind) {
        case TrigKind::Cos: sum = c.real(); break;
        case TrigKind::Sin: sum = c.imag(); break;
        case TrigKind::Cos2: sum = 0.5 * (plain + c.real()); break;
        case TrigKind::Sin2: sum = 0.5 * (plain - c.real()); break;
        case TrigKind::SinCos: sum = 0.5 * c.imag(); break;
    }
    const double norm = std::pow(static_cast<double>(grid.T), k1 + 1) * std::pow(static_cast<double>(grid.S), k2 + 1);
    return sum / norm;
}

// ---------------------------------------------------------------------------
// Text matrix format: "T S" then T lines of S space-separated reals.

inline void write_signal(std::ostream& os, const SignalField& field) {
    os << field.rows() << ' ' << field.cols() << '\n';
    for (int t = 1; t <= field.rows(); ++t) {
        for (int s = 1; s <= field.cols(); ++s) {
            if (s > 1) os << ' ';
            os << format_real(field(t, s));
        }
        os << '\n';
    }
}

inline std::string signal_to_string(const SignalField& field) {
    std::ostringstream os;
    write_signal(os, field);
    return os.str();
}

inline SignalField read_signal(std::istream& is) {
    long long T = 0, S = 0;
    std::string tok;
    auto next = [&](const char* what) {
        if (!(is >> tok)) throw IoError(std::string("signal matrix: missing ") + what);
        return tok;
    };
    try {
        T = parse_integer(next("row count"));
        S = parse_integer(next("column count"));
    } catch (const InvalidArgument& e) {
        throw IoError(std::string("signal matrix header: ") + e.what());
    }
    if (T < 2 || S < 2 || T > 1'000'000 || S > 1'000'000) throw IoError("signal matrix: invalid dimensions");
    Grid grid{static_cast<int>(T), static_cast<int>(S)};
    std::vector<double> values(grid.size());
    for (auto& v : values) {
        try {
            v = parse_real(next("value"));
        } catch (const InvalidArgument& e) {
            throw IoError(std::string("signal matrix: ") + e.what());
        }
        if (!std::isfinite(v)) throw IoError("signal matrix: non-finite value");
    }
    if (is >> tok) throw IoError("signal matrix: trailing data after " + std::to_string(grid.size()) + " values");
    return SignalField(grid, std::move(values));
}

inline SignalField signal_from_string(const std::string& text) {
    std::istringstream is(text);
    return read_signal(is);
}

}  // namespace lad2d
