#include <gtest/gtest.h>

#include <cmath>

#include "lad2d/montecarlo.hpp"

using namespace lad2d;

namespace {

ExperimentSpec small_spec() {
    ExperimentSpec s;
    s.truth = ModelParams{{2.4, 1.4, 0.4, 0.6}};
    s.grid_list = {{16, 16}, {24, 24}};
    s.noise = NoiseSpec::gaussian(0.1);
    s.replications = 12;
    s.base_seed = RngSeed{77};
    return s;
}

TEST(Experiment, IndependentOfThreadCount) {
    auto s = small_spec();
    s.threads = 1;
    const auto a = run_experiment(s);
    s.threads = 4;
    const auto b = run_experiment(s);
    EXPECT_EQ(a, b);
    EXPECT_EQ(emit_table(a, TableFormat::CSV), emit_table(b, TableFormat::CSV));
}

TEST(Experiment, Layout) {
    const auto r = run_experiment(small_spec());
    ASSERT_EQ(r.cells.size(), 4u);
    EXPECT_EQ(r.cells[0].method, Method::LAD);
    EXPECT_EQ(r.cells[1].method, Method::LSE);
    EXPECT_TRUE(r.cells[0].params[0].asy_var.has_value());
    EXPECT_FALSE(r.cells[1].params[0].asy_var.has_value());
    EXPECT_EQ(r.param_names, (std::vector<std::string>{"A1", "B1", "lambda1", "mu1"}));
    const auto csv = emit_table(r, TableFormat::CSV);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "T,S,method,statistic,A1,B1,lambda1,mu1,used,failures");
    // two grids x (LAD: AE, MSE, AsyVar; LSE: AE, MSE) plus the header
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 11);
}

TEST(Experiment, SingleGridSingleMethodHasThreeRows) {
    auto s = small_spec();
    s.grid_list = {{16, 16}};
    s.methods = {Method::LAD};
    s.replications = 2;
    const auto csv = emit_table(run_experiment(s), TableFormat::CSV);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
}

TEST(Experiment, EmptyResultIsHeaderOnly) {
    ExperimentResult empty;
    empty.param_names = parameter_names(1);
    EXPECT_EQ(emit_table(empty, TableFormat::CSV), "T,S,method,statistic,A1,B1,lambda1,mu1,used,failures\n");
    EXPECT_EQ(parse_table_csv(emit_table(empty, TableFormat::CSV)), empty);
}

TEST(Experiment, CsvRoundTrip) {
    const auto r = run_experiment(small_spec());
    EXPECT_EQ(parse_table_csv(emit_table(r, TableFormat::CSV)), r);
    EXPECT_THROW(parse_table_csv("x,y\n"), IoError);
}

TEST(Experiment, SingleReplicationMseIsSquaredBias) {
    auto s = small_spec();
    s.replications = 1;
    const auto r = run_experiment(s);
    const auto truth = s.truth.to_vector();
    for (const auto& c : r.cells)
        for (std::size_t i = 0; i < 4; ++i) {
            const double bias = c.params[i].average_estimate - truth[i];
            EXPECT_EQ(c.params[i].mse, bias * bias);
        }
}

TEST(Experiment, MseDecomposesIntoBiasAndVariance) {
    auto s = small_spec();
    s.grid_list = {{20, 20}};
    s.replications = 30;
    const auto records = run_cell(s, s.grid_list[0]);
    const auto cell = summarize_cell(s, s.grid_list[0], 0, records);
    const auto truth = s.truth.to_vector();
    for (std::size_t i = 0; i < 4; ++i) {
        double mean = 0;
        int n = 0;
        for (const auto& rep : records)
            if (rep[0].estimate && rep[0].converged) {
                mean += (*rep[0].estimate)[i];
                ++n;
            }
        mean /= n;
        double var = 0;
        for (const auto& rep : records)
            if (rep[0].estimate && rep[0].converged) var += std::pow((*rep[0].estimate)[i] - mean, 2);
        var /= n;
        const double bias = mean - truth[i];
        EXPECT_NEAR(cell.params[i].mse, bias * bias + var, 1e-12 * cell.params[i].mse) << i;
    }
}

TEST(Experiment, NoiselessHasNegligibleMse) {
    auto s = small_spec();
    s.noise = NoiseSpec::none();
    s.grid_list = {{20, 20}};
    s.replications = 3;
    const auto r = run_experiment(s);
    for (const auto& c : r.cells)
        for (const auto& p : c.params) {
            EXPECT_LE(p.mse, 1e-8);
            EXPECT_FALSE(p.asy_var.has_value());
        }
}

TEST(Experiment, FailuresAreCountedNotAveraged) {
    auto s = small_spec();
    s.grid_list = {{16, 16}};
    s.methods = {Method::LAD};
    s.replications = 4;
    s.fit.simplex.max_iterations = 3;
    s.fit.simplex.restarts = 0;
    const auto r = run_experiment(s);
    EXPECT_EQ(r.cells[0].failures, 4);
    EXPECT_EQ(r.cells[0].used, 0);
    EXPECT_TRUE(std::isnan(r.cells[0].params[0].mse));
}

TEST(Experiment, TextTableMentionsStatistics) {
    const auto text = emit_table(run_experiment(small_spec()), TableFormat::Text);
    for (const char* s : {"(16,16)", "LAD AE", "LAD MSE", "AsyVar-LAD", "LSE MSE"}) EXPECT_NE(text.find(s), std::string::npos) << s;
}

TEST(Config, ParseAndRenderRoundTrip) {
    const auto spec = parse_experiment_config(R"(# model 4
truth.A1 = 2.4
truth.B1 = 1.4
truth.lambda1 = 0.4
truth.mu1 = 0.6
noise = gaussian:sigma=0.1
grids = 25x25, 50x50
reps = 200
seed = 9
methods = lad,lse
threads = 2
)");
    EXPECT_EQ(spec.truth, (ModelParams{{2.4, 1.4, 0.4, 0.6}}));
    EXPECT_EQ(spec.grid_list.size(), 2u);
    EXPECT_EQ(spec.grid_list[1], (Grid{50, 50}));
    EXPECT_EQ(spec.replications, 200);
    EXPECT_EQ(spec.base_seed.value, 9u);
    EXPECT_EQ(spec.threads, 2);
    const auto again = parse_experiment_config(experiment_config_text(spec));
    EXPECT_EQ(experiment_config_text(again), experiment_config_text(spec));
    EXPECT_EQ(again.truth, spec.truth);
    EXPECT_EQ(again.noise, spec.noise);
}

TEST(Config, Rejections) {
    const std::string base = "truth.A1=1\ntruth.B1=1\ntruth.lambda1=0.5\ntruth.mu1=0.5\ngrids=10x10\n";
    EXPECT_NO_THROW(parse_experiment_config(base));
    EXPECT_THROW(parse_experiment_config(base + "colour=blue\n"), InvalidArgument);
    EXPECT_THROW(parse_experiment_config(base + "reps\n"), InvalidArgument);
    EXPECT_THROW(parse_experiment_config(base + "truth.A2=1\n"), InvalidArgument);
    EXPECT_THROW(parse_experiment_config(base + "grids=10by10\n"), InvalidArgument);
    EXPECT_THROW(parse_experiment_config(base + "reps=0\n"), InvalidArgument);
    EXPECT_THROW(parse_experiment_config("grids=10x10\n"), InvalidArgument);
}

}  // namespace
