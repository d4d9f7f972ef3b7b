// lad2d command-line front end.
//
// Exit codes: 0 success, 1 fit or peak failure, 2 I/O or flag error.
// Every run writes <output>.meta holding the fully resolved flags as
// key=value lines; `lad2d replay <file.meta>` runs the same command again.

#include <CLI11.hpp>

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lad2d/estimator.hpp"
#include "lad2d/format.hpp"
#include "lad2d/montecarlo.hpp"
#include "lad2d/noise.hpp"
#include "lad2d/objective.hpp"
#include "lad2d/texture.hpp"

namespace fs = std::filesystem;
using namespace lad2d;

namespace {

constexpr int kMaxComponents = 6;
constexpr std::uint64_t kDefaultSeed = 20240101;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << bytes;
    if (!out.flush()) throw IoError("write to '" + path + "' failed");
}

/// Resolved flags, in the order they were recorded.
class Meta {
public:
    explicit Meta(std::string subcommand) : subcommand_(std::move(subcommand)) {}
    void add(const std::string& key, const std::string& value) { entries_.emplace_back(key, value); }
    void add(const std::string& key, double v) { add(key, format_real(v)); }
    void add(const std::string& key, long long v) { add(key, std::to_string(v)); }
    void add(const std::string& key, int v) { add(key, std::to_string(v)); }
    void add(const std::string& key, std::uint64_t v) { add(key, std::to_string(v)); }

    void write(const std::string& path) const {
        std::string text = "# lad2d run configuration; rerun with: lad2d replay " + path + "\n";
        text += "subcommand=" + subcommand_ + "\n";
        for (const auto& [k, v] : entries_) text += k + "=" + v + "\n";
        write_file(path, text);
    }

private:
    std::string subcommand_;
    std::vector<std::pair<std::string, std::string>> entries_;
};

/// Rebuilds an argument vector from a .meta file.
std::vector<std::string> replay_arguments(const std::string& meta_path) {
    std::istringstream in(read_file(meta_path));
    std::vector<std::string> args{"lad2d"};
    std::string line;
    std::string sub;
    std::vector<std::string> flags;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw IoError("malformed meta line in '" + meta_path + "': " + line);
        const std::string key = line.substr(0, eq), value = line.substr(eq + 1);
        if (key == "subcommand") {
            sub = value;
        } else {
            flags.push_back("--" + key);
            flags.push_back(value);
        }
    }
    if (sub.empty()) throw IoError("meta file '" + meta_path + "' names no subcommand");
    args.push_back(sub);
    args.insert(args.end(), flags.begin(), flags.end());
    return args;
}

struct TruthFlags {
    int p = 1;
    std::array<std::optional<double>, kMaxComponents> A, B, l, m;

    void attach(CLI::App* app, bool required) {
        auto* po = app->add_option("--p", p, "number of sinusoidal components")->check(CLI::Range(1, kMaxComponents));
        if (required) po->required();
        for (int k = 0; k < kMaxComponents; ++k) {
            const auto i = std::to_string(k + 1);
            app->add_option("--A" + i, A[k], "amplitude A" + i);
            app->add_option("--B" + i, B[k], "amplitude B" + i);
            app->add_option("--l" + i, l[k], "frequency lambda" + i);
            app->add_option("--m" + i, m[k], "frequency mu" + i);
        }
    }

    ModelParams resolve() const {
        ModelParams params;
        for (int k = 0; k < kMaxComponents; ++k) {
            const bool any = A[k] || B[k] || l[k] || m[k];
            if (k >= p) {
                if (any) throw InvalidArgument("component " + std::to_string(k + 1) + " given but --p is " + std::to_string(p));
                continue;
            }
            if (!(A[k] && B[k] && l[k] && m[k]))
                throw InvalidArgument("component " + std::to_string(k + 1) + " needs --A, --B, --l and --m");
            params.components.push_back({*A[k], *B[k], *l[k], *m[k]});
        }
        validate(params);
        return params;
    }

    static void record(Meta& meta, const ModelParams& params) {
        meta.add("p", static_cast<int>(params.order()));
        for (std::size_t k = 0; k < params.order(); ++k) {
            const auto i = std::to_string(k + 1);
            meta.add("A" + i, params[k].A);
            meta.add("B" + i, params[k].B);
            meta.add("l" + i, params[k].lambda);
            meta.add("m" + i, params[k].mu);
        }
    }
};

void add_grid(CLI::App* app, int& T, int& S) {
    app->add_option("--T", T, "grid rows")->check(CLI::PositiveNumber);
    app->add_option("--S", S, "grid columns")->check(CLI::PositiveNumber);
}

// --- subcommands ------------------------------------------------------------

struct SimulateArgs {
    TruthFlags truth;
    int T = 25, S = 25;
    std::string noise = "none";
    std::uint64_t seed = kDefaultSeed;
    std::string out;
};

void run_simulate(const SimulateArgs& a) {
    const ModelParams truth = a.truth.resolve();
    const Grid grid{a.T, a.S};
    validate(grid);
    const NoiseSpec noise = parse_noise_spec(a.noise);
    const SignalField y = simulate_observation(truth, grid, noise, RngSeed{a.seed});
    write_file(a.out, signal_to_string(y));

    Meta meta("simulate");
    TruthFlags::record(meta, truth);
    meta.add("T", a.T);
    meta.add("S", a.S);
    meta.add("noise", to_string(noise));
    meta.add("seed", a.seed);
    meta.add("out", a.out);
    meta.write(a.out + ".meta");
}

struct EstimateArgs {
    std::string in;
    int p = 1;
    std::string method = "lad";
    std::string noise;  ///< optional; enables LAD standard errors
    std::array<std::optional<double>, kMaxComponents> iA, iB, il, im;
    int refinement = 2;
    int max_iter = 0;
    int restarts = 1;
    std::string out;
};

void run_estimate(const EstimateArgs& a) {
    const SignalField y = signal_from_string(read_file(a.in));
    const Method method = parse_method(a.method);
    FitOptions opt;
    opt.refinement = a.refinement;
    opt.simplex.max_iterations = a.max_iter;
    opt.simplex.restarts = a.restarts;
    if (!a.noise.empty()) opt.noise_for_se = parse_noise_spec(a.noise);

    ModelParams init;
    int given = 0;
    for (int k = 0; k < kMaxComponents; ++k) {
        const int n = int(a.iA[k].has_value()) + int(a.iB[k].has_value()) + int(a.il[k].has_value()) + int(a.im[k].has_value());
        if (n == 0) continue;
        if (n != 4 || k >= a.p)
            throw InvalidArgument("initial component " + std::to_string(k + 1) + " needs all four of --init-A/B/l/m within --p");
        init.components.push_back({*a.iA[k], *a.iB[k], *a.il[k], *a.im[k]});
        ++given;
    }
    if (given != 0 && given != a.p) throw InvalidArgument("initial values must be given for all components or none");
    if (given) opt.init = init;

    const EstimateReport rep = fit(y, a.p, method, opt);
    write_file(a.out, report_to_csv(rep));
    std::cout << report_to_text(rep);

    Meta meta("estimate");
    meta.add("in", a.in);
    meta.add("p", a.p);
    meta.add("method", a.method);
    if (!a.noise.empty()) meta.add("noise", to_string(*opt.noise_for_se));
    for (std::size_t k = 0; k < init.order(); ++k) {
        const auto i = std::to_string(k + 1);
        meta.add("init-A" + i, init[k].A);
        meta.add("init-B" + i, init[k].B);
        meta.add("init-l" + i, init[k].lambda);
        meta.add("init-m" + i, init[k].mu);
    }
    meta.add("refinement", a.refinement);
    meta.add("max-iter", a.max_iter);
    meta.add("restarts", a.restarts);
    meta.add("out", a.out);
    meta.write(a.out + ".meta");
}

struct McArgs {
    std::string config;
    std::string out_dir;
    int threads = -1;  ///< -1 keeps the config's value
};

void run_mc(const McArgs& a) {
    ExperimentSpec spec = parse_experiment_config(read_file(a.config));
    if (a.threads >= 0) spec.threads = a.threads;
    const ExperimentResult result = run_experiment(spec);
    std::error_code ec;
    fs::create_directories(a.out_dir, ec);
    if (ec) throw IoError("cannot create directory '" + a.out_dir + "': " + ec.message());
    const std::string csv = (fs::path(a.out_dir) / "table.csv").string();
    write_file(csv, emit_table(result, TableFormat::CSV));
    write_file((fs::path(a.out_dir) / "table.txt").string(), emit_table(result, TableFormat::Text));
    // The resolved experiment itself, then the flags that point at it.
    const std::string resolved = (fs::path(a.out_dir) / "experiment.conf").string();
    write_file(resolved, experiment_config_text(spec));
    std::cout << emit_table(result, TableFormat::Text);

    Meta meta("mc");
    meta.add("config", resolved);
    meta.add("out-dir", a.out_dir);
    meta.add("threads", spec.threads);
    meta.write(csv + ".meta");
}

struct AsyvarArgs {
    TruthFlags truth;
    std::string noise;
    int T = 25, S = 25;
    std::string out;
};

void run_asyvar(const AsyvarArgs& a) {
    const ModelParams truth = a.truth.resolve();
    const NoiseSpec noise = parse_noise_spec(a.noise);
    const Grid grid{a.T, a.S};
    const auto v = asymptotic_variances(truth, density_at_zero(noise), grid);
    const auto names = parameter_names(truth.order());
    std::string csv = "parameter,variance\n";
    for (std::size_t i = 0; i < v.size(); ++i) {
        csv += names[i] + "," + format_real(v[i]) + "\n";
        char buf[64];
        std::snprintf(buf, sizeof buf, "%-10s %.3E\n", names[i].c_str(), v[i]);
        std::cout << buf;
    }
    write_file(a.out, csv);

    Meta meta("asyvar");
    TruthFlags::record(meta, truth);
    meta.add("noise", to_string(noise));
    meta.add("T", a.T);
    meta.add("S", a.S);
    meta.add("out", a.out);
    meta.write(a.out + ".meta");
}

struct PeriodogramArgs {
    std::string in;
    int refinement = 2;
    int p = 1;
    std::string out;
};

void run_periodogram(const PeriodogramArgs& a) {
    const SignalField y = signal_from_string(read_file(a.in));
    const PeriodogramLattice lat = periodogram_lattice(y, a.refinement);
    std::string csv = "lambda,mu,I\n";
    for (std::size_t j = 0; j < lat.lambdas.size(); ++j)
        for (std::size_t k = 0; k < lat.mus.size(); ++k)
            csv += format_real(lat.lambdas[j]) + "," + format_real(lat.mus[k]) + "," + format_real(lat.at(j, k)) + "\n";
    write_file(a.out, csv);

    Meta meta("periodogram");
    meta.add("in", a.in);
    meta.add("refinement", a.refinement);
    meta.add("p", a.p);
    meta.add("out", a.out);
    meta.write(a.out + ".meta");

    // Peaks last: a peak failure still leaves the lattice on disk.
    const auto peaks = pick_peaks(lat, y.grid(), a.p);
    std::cout << "rank,lambda,mu,I\n";
    for (std::size_t i = 0; i < peaks.size(); ++i)
        std::cout << i + 1 << "," << format_real(peaks[i].lambda) << "," << format_real(peaks[i].mu) << ","
                  << format_real(peaks[i].height) << "\n";
}

struct TextureArgs {
    TruthFlags truth;
    int T = 100, S = 100;
    std::string noise = "slash";
    std::uint64_t seed = kDefaultSeed;
    std::string method = "lad";
    std::string stem;
};

void run_texture(TextureArgs a) {
    // With no truth flags at all, render the standard single-grating texture.
    const bool none_given = std::none_of(a.truth.A.begin(), a.truth.A.end(), [](const auto& v) { return v.has_value(); }) &&
                            std::none_of(a.truth.l.begin(), a.truth.l.end(), [](const auto& v) { return v.has_value(); });
    if (none_given && a.truth.p == 1) {
        a.truth.A[0] = 2.4;
        a.truth.B[0] = 1.4;
        a.truth.l[0] = 0.4;
        a.truth.m[0] = 0.6;
    }
    const ModelParams truth = a.truth.resolve();
    const NoiseSpec noise = parse_noise_spec(a.noise);
    const TextureResult r = texture_demo(truth, Grid{a.T, a.S}, noise, RngSeed{a.seed}, parse_method(a.method));
    write_file(a.stem + "_noisy.pgm", write_pgm(r.noisy));
    write_file(a.stem + "_clean.pgm", write_pgm(r.clean));
    write_file(a.stem + "_recovered.pgm", write_pgm(r.recovered));
    write_file(a.stem + "_report.csv", report_to_csv(r.report));
    std::cout << report_to_text(r.report);
    std::cout << "mean absolute pixel error (recovered vs clean): " << format_real(mean_abs_pixel_error(r.recovered, r.clean))
              << "\n";

    Meta meta("texture");
    TruthFlags::record(meta, truth);
    meta.add("T", a.T);
    meta.add("S", a.S);
    meta.add("noise", to_string(noise));
    meta.add("seed", a.seed);
    meta.add("method", a.method);
    meta.add("stem", a.stem);
    meta.write(a.stem + ".meta");
}

int run(std::vector<std::string> args) {
    CLI::App app{"Estimation of 2-D superimposed sinusoids by least absolute deviation and least squares"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* c_sim = app.add_subcommand("simulate", "simulate a noisy signal field");
    sim.truth.attach(c_sim, true);
    add_grid(c_sim, sim.T, sim.S);
    c_sim->add_option("--noise", sim.noise, "noise spec, e.g. gaussian:sigma=0.1, t1, slash, t1+outliers:frac=0.2,offset=auto");
    c_sim->add_option("--seed", sim.seed, "random seed");
    c_sim->add_option("--out", sim.out, "output signal file")->required();

    EstimateArgs est;
    auto* c_est = app.add_subcommand("estimate", "fit p components to a signal file");
    c_est->add_option("--in", est.in, "input signal file")->required();
    c_est->add_option("--p", est.p, "number of components")->required()->check(CLI::Range(1, kMaxComponents));
    c_est->add_option("--method", est.method, "lad or lse");
    c_est->add_option("--noise", est.noise, "noise spec used for LAD standard errors");
    for (int k = 0; k < kMaxComponents; ++k) {
        const auto i = std::to_string(k + 1);
        c_est->add_option("--init-A" + i, est.iA[k]);
        c_est->add_option("--init-B" + i, est.iB[k]);
        c_est->add_option("--init-l" + i, est.il[k]);
        c_est->add_option("--init-m" + i, est.im[k]);
    }
    c_est->add_option("--refinement", est.refinement, "periodogram lattice refinement")->check(CLI::PositiveNumber);
    c_est->add_option("--max-iter", est.max_iter, "simplex iteration limit (0: 2000 per coordinate)")->check(CLI::NonNegativeNumber);
    c_est->add_option("--restarts", est.restarts, "simplex restarts")->check(CLI::NonNegativeNumber);
    c_est->add_option("--out", est.out, "output report CSV")->required();

    McArgs mc;
    auto* c_mc = app.add_subcommand("mc", "run a Monte Carlo experiment from a config file");
    c_mc->add_option("--config", mc.config, "experiment config (key=value)")->required();
    c_mc->add_option("--out-dir", mc.out_dir, "output directory")->required();
    c_mc->add_option("--threads", mc.threads, "worker threads (0: all cores)")->check(CLI::NonNegativeNumber);

    AsyvarArgs av;
    auto* c_av = app.add_subcommand("asyvar", "asymptotic LAD variances");
    av.truth.attach(c_av, true);
    c_av->add_option("--noise", av.noise, "noise spec")->required();
    add_grid(c_av, av.T, av.S);
    c_av->add_option("--out", av.out, "output CSV")->required();

    PeriodogramArgs pg;
    auto* c_pg = app.add_subcommand("periodogram", "periodogram lattice and its highest peaks");
    c_pg->add_option("--in", pg.in, "input signal file")->required();
    c_pg->add_option("--refinement", pg.refinement, "lattice refinement")->check(CLI::PositiveNumber);
    c_pg->add_option("--p", pg.p, "number of peaks to list")->check(CLI::PositiveNumber);
    c_pg->add_option("--out", pg.out, "output CSV")->required();

    TextureArgs tx;
    auto* c_tx = app.add_subcommand("texture", "noisy texture recovery demo, written as PGM images");
    tx.truth.attach(c_tx, false);
    add_grid(c_tx, tx.T, tx.S);
    c_tx->add_option("--noise", tx.noise, "noise spec");
    c_tx->add_option("--seed", tx.seed, "random seed");
    c_tx->add_option("--method", tx.method, "lad or lse");
    c_tx->add_option("--stem", tx.stem, "output path stem")->required();

    std::string replay_path;
    auto* c_replay = app.add_subcommand("replay", "rerun a command from its .meta file");
    c_replay->add_option("meta", replay_path, "meta file")->required();

    // CLI11 takes the arguments without the program name, in reverse order
    args.erase(args.begin());
    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    if (*c_replay) return run(replay_arguments(replay_path));
    if (*c_sim) run_simulate(sim);
    if (*c_est) run_estimate(est);
    if (*c_mc) run_mc(mc);
    if (*c_av) run_asyvar(av);
    if (*c_pg) run_periodogram(pg);
    if (*c_tx) run_texture(tx);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(std::vector<std::string>(argv, argv + argc));
    } catch (const FitError& e) {
        std::cerr << "lad2d: fit failed: " << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        std::cerr << "lad2d: " << e.what() << "\n";
        return 2;
    }
}
