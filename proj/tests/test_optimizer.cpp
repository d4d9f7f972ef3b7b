#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "lad2d/objective.hpp"
#include "lad2d/optimizer.hpp"

using namespace lad2d;

namespace {

double quad(std::span<const double> x) { return (x[0] - 1) * (x[0] - 1) + (x[1] - 2) * (x[1] - 2); }

TEST(NelderMead, Quadratic) {
    const auto r = nelder_mead(quad, {0.0, 0.0}, {}, SimplexConfig{});
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.best_point[0], 1.0, 1e-6);
    EXPECT_NEAR(r.best_point[1], 2.0, 1e-6);
    EXPECT_GT(r.evaluations, r.iterations);
}

TEST(NelderMead, AbsoluteValueInBox) {
    auto f = [](std::span<const double> x) { return std::abs(x[0] - 3); };
    const auto r = nelder_mead(f, {0.0}, {{0.0, 10.0}}, SimplexConfig{});
    EXPECT_NEAR(r.best_point[0], 3.0, 1e-6);
}

TEST(NelderMead, BestValueNeverIncreases) {
    auto rosen = [](std::span<const double> x) {
        return 100 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1 - x[0], 2);
    };
    double last = std::numeric_limits<double>::infinity();
    int calls = 0;
    const auto r = nelder_mead(rosen, {-1.2, 1.0}, {}, SimplexConfig{}, [&](int, double best) {
        EXPECT_LE(best, last);
        last = best;
        ++calls;
    });
    EXPECT_EQ(calls, r.iterations);
    EXPECT_NEAR(r.best_point[0], 1.0, 1e-4);
    EXPECT_NEAR(r.best_point[1], 1.0, 1e-4);
}

TEST(NelderMead, TranslationEquivariance) {
    const double c[] = {3.5, -7.25};
    auto shifted = [&](std::span<const double> x) {
        const double y[] = {x[0] - c[0], x[1] - c[1]};
        return quad(y);
    };
    const auto a = nelder_mead(quad, {0.3, -0.4}, {}, SimplexConfig{});
    const auto b = nelder_mead(shifted, {0.3 + c[0], -0.4 + c[1]}, {}, SimplexConfig{});
    EXPECT_NEAR(b.best_point[0] - c[0], a.best_point[0], 1e-6);
    EXPECT_NEAR(b.best_point[1] - c[1], a.best_point[1], 1e-6);
}

TEST(NelderMead, EveryTrialPointInsideBounds) {
    const std::vector<Bound> box{{-1.0, 0.5}, {0.0, 1.0}};
    auto f = [&](std::span<const double> x) {
        EXPECT_GE(x[0], -1.0);
        EXPECT_LE(x[0], 0.5);
        EXPECT_GE(x[1], 0.0);
        EXPECT_LE(x[1], 1.0);
        return quad(x);
    };
    const auto r = nelder_mead(f, {0.0, 0.5}, box, SimplexConfig{});
    EXPECT_NEAR(r.best_point[0], 0.5, 1e-6);
    EXPECT_NEAR(r.best_point[1], 1.0, 1e-6);
}

TEST(NelderMead, NanRanksAsWorst) {
    // asymmetric around the minimum so no two vertices tie exactly
    auto f = [](std::span<const double> x) {
        const double d = x[0] - 1;
        return x[0] < 0 ? std::nan("") : d * d + 0.3 * d * d * d;
    };
    const auto r = nelder_mead(f, {0.05}, {}, SimplexConfig{});
    EXPECT_NEAR(r.best_point[0], 1.0, 1e-6);
    EXPECT_EQ(r.best_value, f(r.best_point));
}

TEST(NelderMead, IterationLimit) {
    SimplexConfig cfg;
    cfg.max_iterations = 5;
    cfg.restarts = 0;
    const auto r = nelder_mead(quad, {10.0, 10.0}, {}, cfg);
    EXPECT_FALSE(r.converged);
    EXPECT_EQ(r.termination, Termination::MaxIter);
    EXPECT_EQ(r.iterations, 5);
}

TEST(NelderMead, RejectsBadInput) {
    SimplexConfig cfg;
    EXPECT_THROW(nelder_mead(quad, {}, {}, cfg), InvalidArgument);
    EXPECT_THROW(nelder_mead(quad, {2.0, 0.0}, {{0, 1}, {0, 1}}, cfg), InvalidArgument);
    EXPECT_THROW(nelder_mead(quad, {0.0, 0.0}, {{0, 1}}, cfg), InvalidArgument);
    cfg.contraction = 1.5;
    EXPECT_THROW(nelder_mead(quad, {0.0, 0.0}, {}, cfg), InvalidArgument);
    auto inf = [](std::span<const double>) { return std::numeric_limits<double>::infinity(); };
    EXPECT_THROW(nelder_mead(inf, {0.0}, {}, SimplexConfig{}), InvalidArgument);
}

TEST(NelderMead, LadObjectiveNearTruth) {
    const ModelParams truth{{2.4, 1.4, 0.4, 0.6}};
    const auto y = synthesize_signal(truth, {25, 25});
    auto f = [&](std::span<const double> x) {
        return lad_objective(ModelParams::from_vector({x.begin(), x.end()}), y);
    };
    SimplexConfig cfg;
    cfg.initial_step = {0.1, 0.1, 0.02, 0.02};
    const auto r = nelder_mead(f, {2.5, 1.5, 0.405, 0.605}, {{-10, 10}, {-10, 10}, {0, M_PI}, {0, M_PI}}, cfg);
    const auto t = truth.to_vector();
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(r.best_point[i], t[i], 1e-4) << i;
}

}  // namespace
