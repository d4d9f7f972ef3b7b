#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "lad2d/noise.hpp"
#include "lad2d/objective.hpp"
#include "oracles.hpp"

using namespace lad2d;

namespace {

const ModelParams kModel4{{2.4, 1.4, 0.4, 0.6}};
const ModelParams kModel5{{4.2, 3.6, 1.1, 1.9}, {3.3, 2.7, 0.24, 0.36}};

struct Instance {
    ModelParams params;
    SignalField data;
};

Instance random_instance(std::mt19937_64& gen) {
    std::uniform_real_distribution<double> amp(-3, 3), freq(0, M_PI);
    std::uniform_int_distribution<int> dim(2, 12), order(1, 3);
    ModelParams m;
    for (int k = order(gen); k > 0; --k) m.components.push_back({amp(gen), amp(gen), freq(gen), freq(gen)});
    const Grid g{dim(gen), dim(gen)};
    return {m, simulate_observation(ModelParams{{amp(gen), amp(gen), freq(gen), freq(gen)}}, g, NoiseSpec::t1(),
                                    RngSeed{gen()})};
}

TEST(Residuals, Basics) {
    const Grid g{9, 7};
    const auto y = synthesize_signal(kModel5, g);
    const auto r0 = residual_field(kModel5, y);
    for (double r : r0.values()) EXPECT_NEAR(r, 0.0, 1e-12);
    const ModelParams zero{{0, 0, 0.3, 0.3}};
    EXPECT_EQ(residual_field(zero, y), y);
    SignalField shifted = y;
    for (auto& v : shifted.values()) v += 1.75;
    const auto r1 = residual_field(kModel5, shifted);
    for (double r : r1.values()) EXPECT_NEAR(r, 1.75, 1e-12);
}

TEST(Objectives, TrivialValues) {
    const auto y = synthesize_signal(kModel4, {10, 10});
    EXPECT_NEAR(lad_objective(kModel4, y), 0.0, 1e-13);
    EXPECT_NEAR(lse_objective(kModel4, y), 0.0, 1e-26);
    const SignalField ones(Grid{5, 6}, 1.0);
    const ModelParams zero{{0, 0, 0.3, 0.3}};
    EXPECT_DOUBLE_EQ(lad_objective(zero, ones), 1.0);
    EXPECT_DOUBLE_EQ(lse_objective(zero, ones), 1.0);
}

TEST(Objectives, MatchNaiveOracle) {
    std::mt19937_64 gen(101);
    for (int i = 0; i < 100; ++i) {
        const auto inst = random_instance(gen);
        const double lad = lad_objective(inst.params, inst.data), lse = lse_objective(inst.params, inst.data);
        const double lad0 = oracle::lad(inst.params, inst.data), lse0 = oracle::lse(inst.params, inst.data);
        EXPECT_LE(std::abs(lad - lad0), 1e-12 * lad0);
        EXPECT_LE(std::abs(lse - lse0), 1e-12 * lse0);
        EXPECT_GE(lse, lad * lad * (1 - 1e-12));
    }
}

TEST(Objectives, InvariantUnderComponentOrder) {
    const auto y = simulate_observation(kModel5, {15, 12}, NoiseSpec::gaussian(0.5), {4});
    const ModelParams guess{{4.0, 3.0, 1.0, 1.8}, {3.0, 2.0, 0.3, 0.4}};
    const ModelParams swapped{guess[1], guess[0]};
    EXPECT_NEAR(lad_objective(guess, y), lad_objective(swapped, y), 1e-14);
    EXPECT_NEAR(lse_objective(guess, y), lse_objective(swapped, y), 1e-13);
}

TEST(SmoothingDelta, Examples) {
    EXPECT_NEAR(smoothing_delta(0.0, 10.0), 1.0 / 30.0, 1e-15);
    EXPECT_EQ(smoothing_delta(2.0, 10.0), 2.0);
    EXPECT_NEAR(smoothing_delta(0.1, 10.0), 0.1, 1e-15);
    EXPECT_EQ(smoothing_delta(-0.37, 3.0), smoothing_delta(0.37, 3.0));
}

TEST(SmoothingDelta, BoundedAboveAbs) {
    for (double beta : {1.0, 10.0, 1000.0}) {
        for (int i = -20000; i <= 20000; ++i) {
            const double x = 2.0 / beta * i / 20000.0;
            const double d = smoothing_delta(x, beta) - std::abs(x);
            EXPECT_GE(d, -1e-15);
            EXPECT_LE(d, 1.0 / (3 * beta) + 1e-12);
        }
    }
}

// One-sided limit of g at x0 from quadratic extrapolation of g(x0 + side*e),
// e = 1, 2, 3 (x 1e-3). Exact when g is a quadratic on that side, which holds
// for the first and second derivatives of a piecewise cubic.
template <class G>
double one_sided_limit(G g, double x0, double side) {
    const double e = 1e-3;
    return 3 * g(x0 + side * e) - 3 * g(x0 + 2 * side * e) + g(x0 + 3 * side * e);
}

TEST(SmoothingDelta, DerivativesContinuousAtJoins) {
    const double beta = 10.0;
    auto d1 = [&](double x) {
        const double h = 1e-5;
        return (smoothing_delta(x + h, beta) - smoothing_delta(x - h, beta)) / (2 * h);
    };
    auto d2 = [&](double x) {
        const double h = 1e-4;
        return (smoothing_delta(x + h, beta) - 2 * smoothing_delta(x, beta) + smoothing_delta(x - h, beta)) / (h * h);
    };
    for (double x0 : {0.0, 1.0 / beta, -1.0 / beta}) {
        EXPECT_NEAR(one_sided_limit(d1, x0, -1), one_sided_limit(d1, x0, 1), 1e-6) << x0;
        EXPECT_NEAR(one_sided_limit(d2, x0, -1), one_sided_limit(d2, x0, 1), 1e-6) << x0;
    }
    EXPECT_NEAR(one_sided_limit(d2, 0.0, 1), 2 * beta, 1e-6);
}

TEST(SmoothedObjective, Values) {
    const auto y = synthesize_signal(kModel4, {10, 10});
    EXPECT_NEAR(smoothed_lad_objective(kModel4, y, 10.0), 1.0 / 30.0, 1e-12);
    const SignalField big(Grid{4, 4}, 5.0);
    const ModelParams zero{{0, 0, 0.3, 0.3}};
    EXPECT_EQ(smoothed_lad_objective(zero, big, 10.0), lad_objective(zero, big));
    const auto noisy = simulate_observation(kModel4, {12, 12}, NoiseSpec::gaussian(0.3), {6});
    for (double beta : {1.0, 10.0, 100.0, 1e4}) {
        const double gap = smoothed_lad_objective(kModel4, noisy, beta) - lad_objective(kModel4, noisy);
        EXPECT_GE(gap, -1e-15);
        EXPECT_LE(gap, 1.0 / (3 * beta) + 1e-12);
    }
    EXPECT_THROW(smoothed_lad_objective(kModel4, noisy, 0.0), InvalidArgument);
    EXPECT_NEAR(default_smoothing_beta({10, 10}), std::pow(100.0, 0.9), 1e-12);
}

TEST(Periodogram, ZeroFieldIsZero) {
    const SignalField zero(Grid{8, 8});
    EXPECT_EQ(periodogram(zero, 0.7, 1.3), 0.0);
}

TEST(Periodogram, MatchesNaiveSumOnSmallFields) {
    std::mt19937_64 gen(77);
    std::normal_distribution<double> n;
    std::uniform_real_distribution<double> f(0, M_PI);
    for (int trial = 0; trial < 50; ++trial) {
        SignalField y(Grid{8, 8});
        for (auto& v : y.values()) v = n(gen);
        const double l = f(gen), m = f(gen);
        const double ref = oracle::periodogram(y, l, m);
        EXPECT_LE(std::abs(periodogram(y, l, m) - ref), 1e-10 * ref);
        EXPECT_GE(periodogram(y, l, m), 0.0);
    }
}

TEST(Periodogram, EqualsDftOnFourierLattice) {
    std::mt19937_64 gen(78);
    std::normal_distribution<double> n;
    SignalField y(Grid{8, 8});
    for (auto& v : y.values()) v = n(gen);
    for (int j = 0; j <= 4; ++j)
        for (int k = 0; k <= 4; ++k) {
            const double ref = std::norm(oracle::dft(y, j, k)) / 64.0;
            EXPECT_NEAR(periodogram(y, 2 * M_PI * j / 8, 2 * M_PI * k / 8), ref, 1e-10 * std::max(1.0, ref));
        }
}

TEST(Periodogram, LatticeMatchesPointwise) {
    const auto y = simulate_observation(kModel5, {11, 9}, NoiseSpec::gaussian(1.0), {3});
    const auto lat = periodogram_lattice(y, 2);
    ASSERT_EQ(lat.lambdas.size(), 23u);
    ASSERT_EQ(lat.mus.size(), 19u);
    for (std::size_t j = 0; j < lat.lambdas.size(); j += 3)
        for (std::size_t k = 0; k < lat.mus.size(); k += 2) {
            const double ref = oracle::periodogram(y, lat.lambdas[j], lat.mus[k]);
            EXPECT_NEAR(lat.at(j, k), ref, 1e-10 * std::max(1.0, ref));
        }
}

TEST(Periodogram, ArgmaxNearTrueFrequency) {
    const Grid g{100, 100};
    const auto y = synthesize_signal(kModel4, g);
    const auto lat = periodogram_lattice(y, 2);
    const auto it = std::max_element(lat.values.begin(), lat.values.end());
    const auto idx = static_cast<std::size_t>(it - lat.values.begin());
    const double cell = M_PI / 200;
    EXPECT_LE(std::abs(lat.lambdas[idx / lat.mus.size()] - 0.4), cell);
    EXPECT_LE(std::abs(lat.mus[idx % lat.mus.size()] - 0.6), cell);
}

TEST(PickPeaks, TwoComponentsNoiseless) {
    const auto y = synthesize_signal(kModel5, {50, 50});
    const auto peaks = pick_peaks(y, 2);
    ASSERT_EQ(peaks.size(), 2u);
    const double cell = M_PI / 100;
    EXPECT_LE(std::abs(peaks[0].lambda - 1.1), cell);
    EXPECT_LE(std::abs(peaks[0].mu - 1.9), cell);
    EXPECT_LE(std::abs(peaks[1].lambda - 0.24), cell);
    EXPECT_LE(std::abs(peaks[1].mu - 0.36), cell);
    EXPECT_GE(peaks[0].height, peaks[1].height);
}

TEST(PickPeaks, SingleSinusoid) {
    const auto peaks = pick_peaks(synthesize_signal(kModel4, {40, 40}), 1);
    ASSERT_EQ(peaks.size(), 1u);
    EXPECT_LE(std::abs(peaks[0].lambda - 0.4), M_PI / 80);
    EXPECT_LE(std::abs(peaks[0].mu - 0.6), M_PI / 80);
}

TEST(PickPeaks, ZeroFieldHasNoPeaks) {
    try {
        pick_peaks(SignalField(Grid{16, 16}), 1);
        FAIL() << "expected FitError";
    } catch (const FitError& e) {
        EXPECT_NE(std::string(e.what()).find("insufficient peaks"), std::string::npos);
    }
}

TEST(RobustClip, BoundsAndCentres) {
    SignalField y(Grid{10, 10});
    for (std::size_t i = 0; i < y.size(); ++i) y.values()[i] = double(i % 10);
    y(1, 1) = 1e9;
    const auto c = robust_clip(y);
    double mean = 0;
    for (double v : c.values()) mean += v;
    EXPECT_NEAR(mean / c.size(), 0.0, 1e-12);
    EXPECT_LT(*std::max_element(c.values().begin(), c.values().end()), 20.0);
}

}  // namespace
