#pragma once

// End-to-end fitting: periodogram peaks give starting frequencies, a linear
// least-squares solve gives starting amplitudes, and Nelder-Mead minimizes
// the LAD or LSE criterion jointly over all 4p coordinates. Also the
// asymptotic covariance (1 / (4 g(0)^2)) Sigma^{-1} of the LAD estimator and
// its finite-sample scaling.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lad2d/detail/linalg.hpp"
#include "lad2d/error.hpp"
#include "lad2d/format.hpp"
#include "lad2d/model.hpp"
#include "lad2d/noise.hpp"
#include "lad2d/objective.hpp"
#include "lad2d/optimizer.hpp"

namespace lad2d {

enum class Method { LAD, LSE };

inline std::string to_string(Method m) { return m == Method::LAD ? "LAD" : "LSE"; }

inline Method parse_method(std::string_view s) {
    if (s == "lad" || s == "LAD") return Method::LAD;
    if (s == "lse" || s == "LSE") return Method::LSE;
    throw InvalidArgument("unknown method: '" + std::string(s) + "' (expected lad or lse)");
}

// ---------------------------------------------------------------------------
// Asymptotic covariance

/// Block-diagonal 4p x 4p matrix; each 4x4 block, ordered (A, B, lambda, mu),
/// depends only on that component's amplitudes.
inline Matrix sigma_matrix(const ModelParams& params) {
    const std::size_t p = params.order();
    if (p == 0) throw InvalidArgument("sigma_matrix: empty model");
    Matrix sigma(4 * p, 4 * p);
    for (std::size_t k = 0; k < p; ++k) {
        const double A = params[k].A, B = params[k].B, a2 = params[k].power();
        if (!(a2 > 0.0)) throw InvalidArgument("degenerate component: Sigma singular");
        const double blk[4][4] = {
            {0.5, 0.0, B / 4.0, B / 4.0},
            {0.0, 0.5, -A / 4.0, -A / 4.0},
            {B / 4.0, -A / 4.0, a2 / 6.0, a2 / 8.0},
            {B / 4.0, -A / 4.0, a2 / 8.0, a2 / 6.0},
        };
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 4; ++j) sigma(4 * k + i, 4 * k + j) = blk[i][j];
    }
    return sigma;
}

/// Inverse of a block-diagonal matrix with 4x4 blocks, one block at a time.
inline Matrix block_inverse(const Matrix& sigma) {
    const std::size_t n = sigma.rows();
    if (n % 4 != 0 || sigma.cols() != n) throw InvalidArgument("block_inverse: expected 4p x 4p");
    Matrix inv(n, n);
    for (std::size_t k = 0; k < n; k += 4) inv.set_block(k, k, inverse(sigma.block(k, k, 4, 4)));
    return inv;
}

/// Convergence rates per coordinate: sqrt(TS) for amplitudes, T^{3/2} S^{1/2}
/// for lambda, S^{3/2} T^{1/2} for mu.
inline std::vector<double> convergence_rates(std::size_t p, const Grid& grid) {
    const double T = grid.T, S = grid.S;
    std::vector<double> r;
    for (std::size_t k = 0; k < p; ++k)
        r.insert(r.end(), {std::sqrt(T * S), std::sqrt(T * S), T * std::sqrt(T * S), S * std::sqrt(T * S)});
    return r;
}

/// Finite-sample covariance: entry (i, j) of (1 / (4 g0^2)) Sigma^{-1}
/// divided by rate_i * rate_j.
inline Matrix asymptotic_covariance(const ModelParams& params, double g0, const Grid& grid) {
    if (!(g0 > 0.0) || !std::isfinite(g0)) throw InvalidArgument("asymptotic variance requires g(0) > 0");
    validate(grid);
    Matrix c = block_inverse(sigma_matrix(params));
    const auto rate = convergence_rates(params.order(), grid);
    const double factor = 1.0 / (4.0 * g0 * g0);
    for (std::size_t i = 0; i < c.rows(); ++i)
        for (std::size_t j = 0; j < c.cols(); ++j) c(i, j) *= factor / (rate[i] * rate[j]);
    return c;
}

inline std::vector<double> asymptotic_variances(const ModelParams& params, double g0, const Grid& grid) {
    const Matrix c = asymptotic_covariance(params, g0, grid);
    std::vector<double> d(c.rows());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = c(i, i);
    return d;
}

// ---------------------------------------------------------------------------
// Fitting

/// Closed-form least-squares (A_k, B_k) for fixed frequencies: the model is
/// linear in the amplitudes, so this is a 2p x 2p normal-equation solve.
inline ModelParams fit_amplitudes(const SignalField& data, const std::vector<FrequencyPeak>& freqs) {
    const std::size_t p = freqs.size(), m = 2 * p;
    const int T = data.rows(), S = data.cols();
    Matrix xtx(m, m), xty(m, 1);
    std::vector<double> x(m);
    std::vector<std::vector<std::complex<double>>> rows, cols;
    for (const auto& f : freqs) {
        rows.push_back(detail::phasors(f.lambda, T));
        cols.push_back(detail::phasors(f.mu, S));
    }
    for (int t = 1; t <= T; ++t) {
        for (int s = 1; s <= S; ++s) {
            for (std::size_t k = 0; k < p; ++k) {
                const auto e = rows[k][t - 1] * cols[k][s - 1];
                x[2 * k] = e.real();
                x[2 * k + 1] = e.imag();
            }
            const double y = data(t, s);
            for (std::size_t i = 0; i < m; ++i) {
                xty(i, 0) += x[i] * y;
                for (std::size_t j = i; j < m; ++j) xtx(i, j) += x[i] * x[j];
            }
        }
    }
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < i; ++j) xtx(i, j) = xtx(j, i);
    Matrix beta;
    try {
        beta = solve(xtx, xty, 1e-12);
    } catch (const InvalidArgument&) {
        // A peak on the lattice edge (e.g. lambda = mu = 0) zeroes a sine
        // regressor; a small ridge picks the minimum-norm amplitudes.
        double tr = 0.0;
        for (std::size_t i = 0; i < m; ++i) tr += xtx(i, i);
        for (std::size_t i = 0; i < m; ++i) xtx(i, i) += 1e-9 * tr / static_cast<double>(m) + 1e-300;
        beta = solve(xtx, xty, 0.0);
    }
    ModelParams out;
    for (std::size_t k = 0; k < p; ++k) out.components.push_back({beta(2 * k, 0), beta(2 * k + 1, 0), freqs[k].lambda, freqs[k].mu});
    return out;
}

enum class InitStrategy {
    Periodogram,        ///< peaks of the raw-data periodogram
    RobustPeriodogram,  ///< peaks of the periodogram of robust_clip(data)
};

/// Periodogram peaks plus linear amplitudes. The robust strategy takes both
/// from robust_clip(data).
inline ModelParams initial_estimate(const SignalField& data, int p, int refinement = 2,
                                    InitStrategy strategy = InitStrategy::Periodogram) {
    if (strategy == InitStrategy::RobustPeriodogram) {
        const SignalField clipped = robust_clip(data);
        return fit_amplitudes(clipped, pick_peaks(clipped, p, refinement));
    }
    return fit_amplitudes(data, pick_peaks(data, p, refinement));
}

struct FitOptions {
    SimplexConfig simplex{};  ///< empty initial_step selects the grid-aware defaults
    int refinement = 2;
    InitStrategy init_strategy = InitStrategy::RobustPeriodogram;  ///< same start for LAD and LSE
    std::optional<ModelParams> init;
    std::optional<NoiseSpec> noise_for_se;
    double amplitude_bound = kDefaultAmplitudeBound;
    /// Components with A^2 + B^2 below this get no asymptotic covariance.
    double degenerate_power = 1e-8;
};

struct EstimateReport {
    Method method = Method::LAD;
    ModelParams params_hat;
    double objective_value = 0.0;
    std::optional<Matrix> asy_cov;
    std::optional<double> g0_used;
    Grid grid{};
    int iterations = 0;
    bool converged = false;
    Termination termination = Termination::MaxIter;
    std::string diagnostic;

    std::vector<double> standard_errors() const {
        std::vector<double> se;
        if (asy_cov)
            for (std::size_t i = 0; i < asy_cov->rows(); ++i) se.push_back(std::sqrt((*asy_cov)(i, i)));
        return se;
    }
};

/// Initial simplex steps: 0.1 for amplitudes, 0.5 / min(T,S) for frequencies
/// (the frequency basin is O(1/T) wide).
inline std::vector<double> default_initial_steps(std::size_t p, const Grid& grid) {
    const double fstep = 0.5 / std::min(grid.T, grid.S);
    std::vector<double> steps;
    for (std::size_t k = 0; k < p; ++k) steps.insert(steps.end(), {0.1, 0.1, fstep, fstep});
    return steps;
}

inline EstimateReport fit(const SignalField& data, int p, Method method, const FitOptions& options = {}) {
    if (p < 1) throw InvalidArgument("fit: p must be >= 1");
    if (data.rows() < 8 || data.cols() < 8) throw InvalidArgument("fit: grid must be at least 8x8");

    ModelParams start = options.init ? *options.init : initial_estimate(data, p, options.refinement, options.init_strategy);
    if (static_cast<int>(start.order()) != p) throw InvalidArgument("fit: initial model has the wrong order");
    const double bound = options.amplitude_bound;
    for (auto& c : start.components) {
        c.A = std::clamp(c.A, -bound, bound);
        c.B = std::clamp(c.B, -bound, bound);
        c.lambda = std::clamp(c.lambda, 0.0, std::numbers::pi);
        c.mu = std::clamp(c.mu, 0.0, std::numbers::pi);
    }

    std::vector<Bound> bounds;
    for (int k = 0; k < p; ++k)
        bounds.insert(bounds.end(), {{-bound, bound}, {-bound, bound}, {0.0, std::numbers::pi}, {0.0, std::numbers::pi}});

    SimplexConfig cfg = options.simplex;
    if (cfg.initial_step.empty()) cfg.initial_step = default_initial_steps(static_cast<std::size_t>(p), data.grid());

    SignalField work = data;
    ModelParams scratch = start;
    auto objective = [&](std::span<const double> theta) {
        for (std::size_t k = 0; k < scratch.order(); ++k)
            scratch[k] = {theta[4 * k], theta[4 * k + 1], theta[4 * k + 2], theta[4 * k + 3]};
        work.values() = data.values();
        detail::accumulate_model(scratch, work, -1.0);
        double acc = 0.0;
        if (method == Method::LAD)
            for (double r : work.values()) acc += std::abs(r);
        else
            for (double r : work.values()) acc += r * r;
        return acc / static_cast<double>(work.size());
    };

    const OptimResult opt = nelder_mead(objective, start.to_vector(), bounds, cfg);

    EstimateReport rep;
    rep.method = method;
    rep.params_hat = ModelParams::from_vector(opt.best_point);
    rep.objective_value = opt.best_value;
    rep.grid = data.grid();
    rep.iterations = opt.iterations;
    rep.converged = opt.converged;
    rep.termination = opt.termination;
    if (!opt.converged) rep.diagnostic = "optimizer reached the iteration limit";

    if (options.noise_for_se && method == Method::LAD) {
        const bool degenerate = std::any_of(rep.params_hat.components.begin(), rep.params_hat.components.end(),
                                            [&](const ComponentParams& c) { return c.power() < options.degenerate_power; });
        if (degenerate) {
            if (!rep.diagnostic.empty()) rep.diagnostic += "; ";
            rep.diagnostic += "near-zero estimated amplitude: asymptotic covariance omitted";
        } else {
            const double g0 = density_at_zero(*options.noise_for_se);
            rep.g0_used = g0;
            rep.asy_cov = asymptotic_covariance(rep.params_hat, g0, rep.grid);
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Label matching

/// perm[i] is the index of the estimated component assigned to truth
/// component i, minimizing the total squared frequency distance over all p!
/// assignments.
inline std::vector<std::size_t> match_components(const ModelParams& estimated, const ModelParams& truth) {
    if (estimated.order() != truth.order()) throw InvalidArgument("match_components: model orders differ");
    const std::size_t p = truth.order();
    if (p > 8) throw InvalidArgument("match_components: exhaustive matching supports p <= 8");
    std::vector<std::size_t> perm(p), best;
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    double best_cost = std::numeric_limits<double>::infinity();
    do {
        double cost = 0.0;
        for (std::size_t i = 0; i < p; ++i) {
            const auto& e = estimated[perm[i]];
            const auto& t = truth[i];
            cost += (e.lambda - t.lambda) * (e.lambda - t.lambda) + (e.mu - t.mu) * (e.mu - t.mu);
        }
        if (cost < best_cost) {
            best_cost = cost;
            best = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

inline ModelParams apply_permutation(const ModelParams& m, const std::vector<std::size_t>& perm) {
    ModelParams out;
    for (auto i : perm) out.components.push_back(m[i]);
    return out;
}

// ---------------------------------------------------------------------------
// Report rendering. Components appear in descending A^2 + B^2.

inline std::vector<std::size_t> canonical_order(const ModelParams& m) {
    std::vector<std::size_t> idx(m.order());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return m[a].power() > m[b].power(); });
    return idx;
}

inline std::string report_csv_header(std::size_t p) {
    std::string h = "method,p";
    const char* names[] = {"A", "B", "lambda", "mu"};
    for (std::size_t k = 1; k <= p; ++k)
        for (auto n : names) h += std::string(",") + n + std::to_string(k);
    for (std::size_t k = 1; k <= p; ++k)
        for (auto n : names) h += std::string(",se_") + n + std::to_string(k);
    h += ",objective,iterations,converged";
    return h;
}

inline std::string report_csv_row(const EstimateReport& r) {
    const auto order = canonical_order(r.params_hat);
    const auto se = r.standard_errors();
    std::string row = to_string(r.method) + "," + std::to_string(r.params_hat.order());
    for (auto k : order) {
        const auto& c = r.params_hat[k];
        for (double v : {c.A, c.B, c.lambda, c.mu}) row += "," + format_real(v);
    }
    for (auto k : order)
        for (std::size_t i = 0; i < 4; ++i) row += "," + (se.empty() ? std::string() : format_real(se[4 * k + i]));
    row += "," + format_real(r.objective_value) + "," + std::to_string(r.iterations) + "," +
           (r.converged ? "true" : "false");
    return row;
}

inline std::string report_to_csv(const EstimateReport& r) {
    return report_csv_header(r.params_hat.order()) + "\n" + report_csv_row(r) + "\n";
}

inline std::string report_to_text(const EstimateReport& r) {
    std::ostringstream os;
    os << to_string(r.method) << " estimate, p = " << r.params_hat.order() << ", grid " << r.grid.T << "x" << r.grid.S
       << "\n";
    os << "objective " << format_real(r.objective_value) << ", iterations " << r.iterations << ", "
       << (r.converged ? "converged" : "not converged") << "\n";
    const auto se = r.standard_errors();
    const char* names[] = {"A", "B", "lambda", "mu"};
    int label = 1;
    for (auto k : canonical_order(r.params_hat)) {
        const auto& c = r.params_hat[k];
        const double v[] = {c.A, c.B, c.lambda, c.mu};
        for (int i = 0; i < 4; ++i) {
            os << "  " << names[i] << label << " = " << format_real(v[i]);
            if (!se.empty()) os << "  (se " << format_real(se[4 * k + i]) << ")";
            os << "\n";
        }
        ++label;
    }
    if (r.g0_used) os << "g(0) = " << format_real(*r.g0_used) << "\n";
    if (!r.diagnostic.empty()) os << "note: " << r.diagnostic << "\n";
    return os.str();
}

}  // namespace lad2d
