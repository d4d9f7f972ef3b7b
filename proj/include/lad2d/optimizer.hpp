#pragma once

// Nelder-Mead downhill simplex over a box. Trial points are clamped into the
// box, non-finite objective values rank as +inf, and an optional restart
// rebuilds the simplex around the incumbent.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "lad2d/error.hpp"

namespace lad2d {

struct Bound {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
};

struct SimplexConfig {
    int max_iterations = 0;  ///< 0 selects 2000 * dimension
    double x_tolerance = 1e-9;
    double f_tolerance = 1e-12;
    double reflection = 1.0;
    double expansion = 2.0;
    double contraction = 0.5;
    double shrink = 0.5;
    std::vector<double> initial_step;  ///< per coordinate; empty selects 0.1 everywhere
    int restarts = 1;
};

inline void validate(const SimplexConfig& c) {
    if (!(c.reflection > 0.0 && c.expansion > c.reflection))
        throw InvalidArgument("simplex: need expansion > reflection > 0");
    if (!(c.contraction > 0.0 && c.contraction < 1.0)) throw InvalidArgument("simplex: contraction must be in (0,1)");
    if (!(c.shrink > 0.0 && c.shrink < 1.0)) throw InvalidArgument("simplex: shrink must be in (0,1)");
    if (!(c.x_tolerance > 0.0) || !(c.f_tolerance > 0.0)) throw InvalidArgument("simplex: tolerances must be > 0");
    if (c.max_iterations < 0 || c.restarts < 0) throw InvalidArgument("simplex: negative iteration or restart count");
    for (double s : c.initial_step)
        if (!(s > 0.0)) throw InvalidArgument("simplex: initial steps must be positive");
}

enum class Termination { XTol, FTol, MaxIter };

struct OptimResult {
    std::vector<double> best_point;
    double best_value = std::numeric_limits<double>::infinity();
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
    Termination termination = Termination::MaxIter;
};

using Objective = std::function<double(std::span<const double>)>;

/// Called after every iteration with (iteration, best value so far).
using IterationObserver = std::function<void(int, double)>;

inline OptimResult nelder_mead(const Objective& objective, std::vector<double> initial, std::vector<Bound> bounds,
                               const SimplexConfig& config, const IterationObserver& observer = {}) {
    validate(config);
    const std::size_t n = initial.size();
    if (n == 0) throw InvalidArgument("nelder_mead: empty parameter vector");
    if (bounds.empty()) bounds.assign(n, Bound{});
    if (bounds.size() != n) throw InvalidArgument("nelder_mead: bounds size mismatch");
    if (!config.initial_step.empty() && config.initial_step.size() != n)
        throw InvalidArgument("nelder_mead: initial_step size mismatch");
    for (std::size_t i = 0; i < n; ++i) {
        if (!(bounds[i].lo <= bounds[i].hi)) throw InvalidArgument("nelder_mead: inconsistent bounds");
        if (!(initial[i] >= bounds[i].lo && initial[i] <= bounds[i].hi))
            throw InvalidArgument("nelder_mead: initial point outside bounds");
    }

    OptimResult result;
    auto clamp = [&](std::vector<double>& x) {
        for (std::size_t i = 0; i < n; ++i) x[i] = std::clamp(x[i], bounds[i].lo, bounds[i].hi);
    };
    auto eval = [&](const std::vector<double>& x) {
        ++result.evaluations;
        const double f = objective(std::span<const double>(x));
        return std::isnan(f) ? std::numeric_limits<double>::infinity() : f;
    };

    const double f0 = eval(initial);
    if (!std::isfinite(f0)) throw InvalidArgument("nelder_mead: objective is not finite at the initial point");

    const int max_iter = config.max_iterations > 0 ? config.max_iterations : 2000 * static_cast<int>(n);
    std::vector<std::vector<double>> simplex(n + 1);
    std::vector<double> fvals(n + 1);
    std::vector<double> best = initial;
    double fbest = f0;

    auto build = [&] {
        simplex[0] = best;
        fvals[0] = fbest;
        for (std::size_t i = 0; i < n; ++i) {
            auto v = best;
            const double step = config.initial_step.empty() ? 0.1 : config.initial_step[i];
            v[i] += step;
            // step the other way when the box is in the road
            if (v[i] > bounds[i].hi) v[i] = best[i] - step;
            clamp(v);
            simplex[i + 1] = std::move(v);
            fvals[i + 1] = eval(simplex[i + 1]);
        }
    };

    std::vector<std::size_t> order(n + 1);
    auto sort_simplex = [&] {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fvals[a] < fvals[b]; });
        std::vector<std::vector<double>> s2(n + 1);
        std::vector<double> f2(n + 1);
        for (std::size_t i = 0; i <= n; ++i) {
            s2[i] = std::move(simplex[order[i]]);
            f2[i] = fvals[order[i]];
        }
        simplex.swap(s2);
        fvals.swap(f2);
    };

    auto diameter = [&] {
        double d = 0.0;
        for (std::size_t v = 1; v <= n; ++v)
            for (std::size_t i = 0; i < n; ++i) d = std::max(d, std::abs(simplex[v][i] - simplex[0][i]));
        return d;
    };

    std::vector<double> centroid(n), xr(n), xe(n), xc(n);
    auto along = [&](std::vector<double>& out, const std::vector<double>& from, double coef) {
        // out = centroid + coef * (from - centroid)
        for (std::size_t i = 0; i < n; ++i) out[i] = centroid[i] + coef * (from[i] - centroid[i]);
        clamp(out);
    };

    int iter = 0;
    for (int round = 0; round <= config.restarts; ++round) {
        build();
        result.termination = Termination::MaxIter;
        while (true) {
            sort_simplex();
            if (fvals[0] <= fbest) {
                fbest = fvals[0];
                best = simplex[0];
            }
            if (diameter() < config.x_tolerance) {
                result.termination = Termination::XTol;
                break;
            }
            if (std::isfinite(fvals[n]) && fvals[n] - fvals[0] < config.f_tolerance) {
                result.termination = Termination::FTol;
                break;
            }
            if (iter >= max_iter) break;
            ++iter;

            std::fill(centroid.begin(), centroid.end(), 0.0);
            for (std::size_t v = 0; v < n; ++v)
                for (std::size_t i = 0; i < n; ++i) centroid[i] += simplex[v][i];
            for (auto& c : centroid) c /= static_cast<double>(n);

            const auto& worst = simplex[n];
            along(xr, worst, -config.reflection);
            const double fr = eval(xr);
            bool do_shrink = false;
            if (fr < fvals[0]) {
                along(xe, worst, -config.reflection * config.expansion);
                const double fe = eval(xe);
                if (fe < fr) {
                    simplex[n] = xe;
                    fvals[n] = fe;
                } else {
                    simplex[n] = xr;
                    fvals[n] = fr;
                }
            } else if (fr < fvals[n - 1]) {
                simplex[n] = xr;
                fvals[n] = fr;
            } else if (fr < fvals[n]) {
                along(xc, worst, -config.reflection * config.contraction);
                const double fc = eval(xc);
                if (fc <= fr) {
                    simplex[n] = xc;
                    fvals[n] = fc;
                } else {
                    do_shrink = true;
                }
            } else {
                along(xc, worst, config.contraction);
                const double fc = eval(xc);
                if (fc < fvals[n]) {
                    simplex[n] = xc;
                    fvals[n] = fc;
                } else {
                    do_shrink = true;
                }
            }
            if (do_shrink) {
                for (std::size_t v = 1; v <= n; ++v) {
                    for (std::size_t i = 0; i < n; ++i)
                        simplex[v][i] = simplex[0][i] + config.shrink * (simplex[v][i] - simplex[0][i]);
                    clamp(simplex[v]);
                    fvals[v] = eval(simplex[v]);
                }
            }
            if (observer) observer(iter, std::min(fbest, *std::min_element(fvals.begin(), fvals.end())));
        }
        if (iter >= max_iter) break;
    }

    result.best_point = std::move(best);
    result.best_value = fbest;
    result.iterations = iter;
    result.converged = result.termination != Termination::MaxIter;
    return result;
}

}  // namespace lad2d
