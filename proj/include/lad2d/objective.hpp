#pragma once

// Fitting criteria (LAD, LSE, smoothed LAD) and the 2-D periodogram used to
// locate starting frequencies.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "lad2d/error.hpp"
#include "lad2d/model.hpp"

namespace lad2d {

enum class Loss { LAD, LSE, SmoothedLAD };

struct ObjectiveKind {
    Loss loss = Loss::LAD;
    double beta = 0.0;  ///< SmoothedLAD only, > 0

    static ObjectiveKind lad() { return {Loss::LAD, 0.0}; }
    static ObjectiveKind lse() { return {Loss::LSE, 0.0}; }
    static ObjectiveKind smoothed_lad(double beta) {
        if (!(beta > 0.0)) throw InvalidArgument("smoothed LAD requires beta > 0");
        return {Loss::SmoothedLAD, beta};
    }
};

/// r(t,s) = y(t,s) - model(t,s).
inline SignalField residual_field(const ModelParams& params, const SignalField& data) {
    SignalField r = data;
    detail::accumulate_model(params, r, -1.0);
    return r;
}

/// Even, C^2 cap of |x|: the cubic -(b^2/3)x^3 + b x^2 + 1/(3b) on (0, 1/b],
/// |x| beyond. Exceeds |x| by at most 1/(3b), attained at x = 0.
inline double smoothing_delta(double x, double beta) {
    const double a = std::abs(x);
    if (a > 1.0 / beta) return a;
    return (-(beta * beta) / 3.0 * a + beta) * a * a + 1.0 / (3.0 * beta);
}

/// beta = (TS)^0.9, which satisfies (TS)^2 = o(beta^3) and beta = o(TS).
inline double default_smoothing_beta(const Grid& grid) { return std::pow(static_cast<double>(grid.size()), 0.9); }

namespace detail {

template <class F>
double mean_of_residuals(const ModelParams& params, const SignalField& data, F&& f) {
    const SignalField r = residual_field(params, data);
    double acc = 0.0;
    for (double v : r.values()) acc += f(v);
    return acc / static_cast<double>(r.size());
}

}  // namespace detail

inline double lad_objective(const ModelParams& params, const SignalField& data) {
    return detail::mean_of_residuals(params, data, [](double r) { return std::abs(r); });
}

inline double lse_objective(const ModelParams& params, const SignalField& data) {
    return detail::mean_of_residuals(params, data, [](double r) { return r * r; });
}

inline double smoothed_lad_objective(const ModelParams& params, const SignalField& data, double beta) {
    if (!(beta > 0.0)) throw InvalidArgument("smoothed LAD requires beta > 0");
    return detail::mean_of_residuals(params, data, [beta](double r) { return smoothing_delta(r, beta); });
}

inline double objective_value(const ObjectiveKind& kind, const ModelParams& params, const SignalField& data) {
    switch (kind.loss) {
        case Loss::LAD: return lad_objective(params, data);
        case Loss::LSE: return lse_objective(params, data);
        case Loss::SmoothedLAD: return smoothed_lad_objective(params, data, kind.beta);
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// Periodogram

inline void require_frequency(double f, const char* name) {
    if (!(f >= 0.0 && f <= std::numbers::pi))
        throw InvalidArgument(std::string("periodogram: ") + name + " must lie in [0, pi]");
}

/// I(lambda, mu) = |sum_t sum_s y(t,s) e^{-i(lambda t + mu s)}|^2 / (TS).
inline double periodogram(const SignalField& data, double lambda, double mu) {
    require_frequency(lambda, "lambda");
    require_frequency(mu, "mu");
    const auto rows = detail::phasors(-lambda, data.rows());
    const auto cols = detail::phasors(-mu, data.cols());
    std::complex<double> total = 0.0;
    for (int t = 1; t <= data.rows(); ++t) {
        std::complex<double> inner = 0.0;
        for (int s = 1; s <= data.cols(); ++s) inner += data(t, s) * cols[s - 1];
        total += rows[t - 1] * inner;
    }
    return std::norm(total) / static_cast<double>(data.size());
}

/// I on the lattice lambda_j = pi j / (R T), mu_k = pi k / (R S),
/// j = 0..RT, k = 0..RS.
struct PeriodogramLattice {
    int refinement = 2;
    std::vector<double> lambdas;
    std::vector<double> mus;
    std::vector<double> values;  ///< row-major, lambdas.size() x mus.size()

    double at(std::size_t j, std::size_t k) const { return values[j * mus.size() + k]; }
};

/// Direct summation, organised separably: first the column transforms
/// W(t, k) = sum_s y(t,s) e^{-i mu_k s}, then sum_t e^{-i lambda_j t} W(t, k).
inline PeriodogramLattice periodogram_lattice(const SignalField& data, int refinement = 2) {
    if (refinement < 1) throw InvalidArgument("periodogram: refinement must be >= 1");
    const int T = data.rows(), S = data.cols();
    PeriodogramLattice lat;
    lat.refinement = refinement;
    const int J = refinement * T, K = refinement * S;
    for (int j = 0; j <= J; ++j) lat.lambdas.push_back(std::numbers::pi * j / J);
    for (int k = 0; k <= K; ++k) lat.mus.push_back(std::numbers::pi * k / K);

    const std::size_t nk = lat.mus.size();
    std::vector<std::complex<double>> W(static_cast<std::size_t>(T) * nk);
    for (std::size_t k = 0; k < nk; ++k) {
        const auto cols = detail::phasors(-lat.mus[k], S);
        for (int t = 1; t <= T; ++t) {
            std::complex<double> acc = 0.0;
            for (int s = 1; s <= S; ++s) acc += data(t, s) * cols[s - 1];
            W[static_cast<std::size_t>(t - 1) * nk + k] = acc;
        }
    }
    lat.values.assign(lat.lambdas.size() * nk, 0.0);
    std::vector<std::complex<double>> acc(nk);
    for (std::size_t j = 0; j < lat.lambdas.size(); ++j) {
        const auto rows = detail::phasors(-lat.lambdas[j], T);
        std::fill(acc.begin(), acc.end(), std::complex<double>(0.0));
        for (int t = 0; t < T; ++t) {
            const auto e = rows[t];
            const auto* w = &W[static_cast<std::size_t>(t) * nk];
            for (std::size_t k = 0; k < nk; ++k) acc[k] += e * w[k];
        }
        for (std::size_t k = 0; k < nk; ++k) lat.values[j * nk + k] = std::norm(acc[k]) / static_cast<double>(T * S);
    }
    return lat;
}

/// Copy of `data` with each value clipped to median +/- c * 1.4826 * MAD and
/// the mean of the clipped values removed. Bounded influence keeps isolated
/// spikes and constant outlier offsets from masking periodogram peaks.
inline SignalField robust_clip(const SignalField& data, double c = 2.0) {
    if (!(c > 0.0)) throw InvalidArgument("robust_clip: threshold must be > 0");
    auto median_of = [](std::vector<double> v) {
        const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
        std::nth_element(v.begin(), mid, v.end());
        double m = *mid;
        if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), mid));
        return m;
    };
    const double med = median_of(data.values());
    std::vector<double> dev(data.size());
    for (std::size_t i = 0; i < dev.size(); ++i) dev[i] = std::abs(data.values()[i] - med);
    const double scale = 1.4826 * median_of(dev);
    SignalField out = data;
    if (!(scale > 0.0)) return out;
    double mean = 0.0;
    for (auto& v : out.values()) {
        v = std::clamp(v, med - c * scale, med + c * scale);
        mean += v;
    }
    mean /= static_cast<double>(out.size());
    for (auto& v : out.values()) v -= mean;
    return out;
}

struct FrequencyPeak {
    double lambda = 0.0;
    double mu = 0.0;
    double height = 0.0;
};

/// The p highest local maxima of the lattice periodogram, descending by
/// height. Two maxima closer than 2 pi / min(T,S) in both coordinates
/// belong to one main lobe and only the higher one is kept.
inline std::vector<FrequencyPeak> pick_peaks(const PeriodogramLattice& lat, const Grid& grid, int p) {
    if (p < 1) throw InvalidArgument("pick_peaks: p must be >= 1");
    const std::size_t nj = lat.lambdas.size(), nk = lat.mus.size();
    const double vmax = *std::max_element(lat.values.begin(), lat.values.end());
    // Values at or below this floor are treated as numerical zero.
    const double floor = vmax * 1e-12;

    std::vector<FrequencyPeak> candidates;
    for (std::size_t j = 0; j < nj; ++j) {
        for (std::size_t k = 0; k < nk; ++k) {
            const double v = lat.at(j, k);
            if (!(v > floor) || vmax <= 0.0) continue;
            bool is_max = true;
            for (int dj = -1; dj <= 1 && is_max; ++dj) {
                for (int dk = -1; dk <= 1; ++dk) {
                    if (dj == 0 && dk == 0) continue;
                    const auto jj = static_cast<std::ptrdiff_t>(j) + dj, kk = static_cast<std::ptrdiff_t>(k) + dk;
                    if (jj < 0 || kk < 0 || jj >= static_cast<std::ptrdiff_t>(nj) || kk >= static_cast<std::ptrdiff_t>(nk))
                        continue;
                    const double w = lat.at(static_cast<std::size_t>(jj), static_cast<std::size_t>(kk));
                    // plateaus: the first cell in row-major order wins
                    const bool earlier = dj < 0 || (dj == 0 && dk < 0);
                    if (earlier ? w >= v : w > v) {
                        is_max = false;
                        break;
                    }
                }
            }
            if (is_max) candidates.push_back({lat.lambdas[j], lat.mus[k], v});
        }
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const FrequencyPeak& a, const FrequencyPeak& b) { return a.height > b.height; });

    const double sep = 2.0 * std::numbers::pi / std::min(grid.T, grid.S);
    std::vector<FrequencyPeak> chosen;
    for (const auto& c : candidates) {
        const bool clashes = std::any_of(chosen.begin(), chosen.end(), [&](const FrequencyPeak& q) {
            return std::abs(q.lambda - c.lambda) < sep && std::abs(q.mu - c.mu) < sep;
        });
        if (!clashes) chosen.push_back(c);
        if (static_cast<int>(chosen.size()) == p) return chosen;
    }
    throw FitError("insufficient peaks: found " + std::to_string(chosen.size()) + " separated local maxima, need " +
                   std::to_string(p));
}

inline std::vector<FrequencyPeak> pick_peaks(const SignalField& data, int p, int grid_refinement = 2) {
    if (p < 1) throw InvalidArgument("pick_peaks: p must be >= 1");
    return pick_peaks(periodogram_lattice(data, grid_refinement), data.grid(), p);
}

}  // namespace lad2d
