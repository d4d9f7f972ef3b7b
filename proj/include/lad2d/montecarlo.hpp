#pragma once

// Replicated simulation experiments: average estimate, MSE and the LAD
// asymptotic variance per parameter, per grid size and method, laid out like
// the usual AE / MSE / AsyVar-LAD tables.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "lad2d/error.hpp"
#include "lad2d/estimator.hpp"
#include "lad2d/format.hpp"
#include "lad2d/model.hpp"
#include "lad2d/noise.hpp"

namespace lad2d {

struct ExperimentSpec {
    ModelParams truth;
    std::vector<Grid> grid_list;
    NoiseSpec noise;
    std::vector<Method> methods{Method::LAD, Method::LSE};
    int replications = 1000;
    RngSeed base_seed{20240101};
    FitOptions fit{};
    /// LSE runs that hit the iteration limit still count toward AE/MSE
    /// unless this is set; LAD non-convergence is always excluded.
    bool exclude_lse_failures = false;
    /// Worker threads; 0 uses the hardware concurrency.
    int threads = 0;
};

inline void validate(const ExperimentSpec& spec) {
    validate(spec.truth);
    validate(spec.noise);
    if (spec.replications < 1) throw InvalidArgument("experiment: replications must be >= 1");
    if (spec.grid_list.empty()) throw InvalidArgument("experiment: grid list is empty");
    for (const auto& g : spec.grid_list) validate(g);
    if (spec.methods.empty()) throw InvalidArgument("experiment: no methods selected");
    if (spec.threads < 0) throw InvalidArgument("experiment: negative thread count");
}

struct ParamStats {
    double average_estimate = 0.0;
    double mse = 0.0;
    std::optional<double> asy_var;

    friend bool operator==(const ParamStats&, const ParamStats&) = default;
};

struct CellResult {
    Grid grid{};
    Method method = Method::LAD;
    std::vector<ParamStats> params;
    int used = 0;      ///< replications averaged
    int failures = 0;  ///< fit errors plus non-converged runs

    friend bool operator==(const CellResult&, const CellResult&) = default;
};

struct ExperimentResult {
    std::vector<std::string> param_names;
    std::vector<CellResult> cells;

    friend bool operator==(const ExperimentResult&, const ExperimentResult&) = default;
};

/// A1, B1, lambda1, mu1, A2, ...
inline std::vector<std::string> parameter_names(std::size_t p) {
    std::vector<std::string> names;
    for (std::size_t k = 1; k <= p; ++k)
        for (const char* n : {"A", "B", "lambda", "mu"}) names.push_back(n + std::to_string(k));
    return names;
}

/// Outcome of fitting one simulated data set with one method; estimates are
/// already label-matched to the truth.
struct ReplicationRecord {
    std::optional<std::vector<double>> estimate;
    bool converged = false;
    std::string error;
};

inline std::vector<ReplicationRecord> run_replication(const ExperimentSpec& spec, const Grid& grid, int index) {
    const SignalField y = simulate_observation(spec.truth, grid, spec.noise, derive_seed(spec.base_seed, index));
    std::vector<ReplicationRecord> out;
    for (Method m : spec.methods) {
        ReplicationRecord rec;
        try {
            const auto rep = fit(y, static_cast<int>(spec.truth.order()), m, spec.fit);
            rec.estimate = apply_permutation(rep.params_hat, match_components(rep.params_hat, spec.truth)).to_vector();
            rec.converged = rep.converged;
        } catch (const Error& e) {
            rec.error = e.what();
        }
        out.push_back(std::move(rec));
    }
    return out;
}

/// All replications for one grid, indexed [replication][method]. Work is
/// spread over threads but every replication's data and fit depend only on
/// (spec, grid, index), so the output does not depend on the thread count.
inline std::vector<std::vector<ReplicationRecord>> run_cell(const ExperimentSpec& spec, const Grid& grid) {
    std::vector<std::vector<ReplicationRecord>> records(static_cast<std::size_t>(spec.replications));
    int nthreads = spec.threads > 0 ? spec.threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    nthreads = std::min(nthreads, spec.replications);
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int r = next++; r < spec.replications; r = next++) records[r] = run_replication(spec, grid, r);
    };
    if (nthreads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    }
    return records;
}

inline bool counts_toward_stats(const ReplicationRecord& r, Method m, bool exclude_lse_failures) {
    if (!r.estimate) return false;
    if (r.converged) return true;
    return m == Method::LSE && !exclude_lse_failures;
}

/// AE and MSE over the accepted replications, reduced in replication order.
inline CellResult summarize_cell(const ExperimentSpec& spec, const Grid& grid, std::size_t method_index,
                                 const std::vector<std::vector<ReplicationRecord>>& records) {
    const Method method = spec.methods[method_index];
    const auto truth = spec.truth.to_vector();
    CellResult cell;
    cell.grid = grid;
    cell.method = method;
    cell.params.assign(truth.size(), ParamStats{});
    for (const auto& rep : records) {
        const auto& r = rep[method_index];
        if (!r.estimate || !r.converged) ++cell.failures;
        if (!counts_toward_stats(r, method, spec.exclude_lse_failures)) continue;
        ++cell.used;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            const double e = (*r.estimate)[i];
            cell.params[i].average_estimate += e;
            cell.params[i].mse += (e - truth[i]) * (e - truth[i]);
        }
    }
    for (auto& ps : cell.params) {
        if (cell.used > 0) {
            ps.average_estimate /= cell.used;
            ps.mse /= cell.used;
        } else {
            ps.average_estimate = std::nan("");
            ps.mse = std::nan("");
        }
    }
    if (method == Method::LAD && spec.noise.family != NoiseFamily::None) {
        const auto av = asymptotic_variances(spec.truth, density_at_zero(spec.noise), grid);
        for (std::size_t i = 0; i < av.size(); ++i) cell.params[i].asy_var = av[i];
    }
    return cell;
}

inline ExperimentResult run_experiment(const ExperimentSpec& spec) {
    validate(spec);
    ExperimentResult result;
    result.param_names = parameter_names(spec.truth.order());
    for (const auto& grid : spec.grid_list) {
        const auto records = run_cell(spec, grid);
        for (std::size_t m = 0; m < spec.methods.size(); ++m) result.cells.push_back(summarize_cell(spec, grid, m, records));
    }
    return result;
}

// ---------------------------------------------------------------------------
// Tables

enum class TableFormat { CSV, Text };

inline std::string emit_table(const ExperimentResult& result, TableFormat format) {
    std::ostringstream os;
    if (format == TableFormat::CSV) {
        os << "T,S,method,statistic";
        for (const auto& n : result.param_names) os << ',' << n;
        os << ",used,failures\n";
        for (const auto& c : result.cells) {
            auto row = [&](const char* stat, auto get) {
                os << c.grid.T << ',' << c.grid.S << ',' << to_string(c.method) << ',' << stat;
                for (const auto& p : c.params) os << ',' << format_real(get(p));
                os << ',' << c.used << ',' << c.failures << '\n';
            };
            row("AE", [](const ParamStats& p) { return p.average_estimate; });
            row("MSE", [](const ParamStats& p) { return p.mse; });
            const bool has_asy = !c.params.empty() && std::all_of(c.params.begin(), c.params.end(),
                                                                  [](const ParamStats& p) { return p.asy_var.has_value(); });
            if (has_asy) row("AsyVar", [](const ParamStats& p) { return *p.asy_var; });
        }
        return os.str();
    }

    auto cell_text = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%12.4g", v);
        if (std::abs(v) < 1e-2 || std::abs(v) >= 1e4) std::snprintf(buf, sizeof buf, "%12.3E", v);
        return std::string(buf);
    };
    char head[64];
    std::snprintf(head, sizeof head, "%-12s%-12s", "(T,S)", "");
    os << head;
    for (const auto& n : result.param_names) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%12s", n.c_str());
        os << buf;
    }
    os << "\n";
    Grid last{};
    for (const auto& c : result.cells) {
        std::string label;
        if (!(c.grid == last)) label = "(" + std::to_string(c.grid.T) + "," + std::to_string(c.grid.S) + ")";
        last = c.grid;
        auto line = [&](const std::string& stat, auto get) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%-12s%-12s", label.c_str(), stat.c_str());
            label.clear();
            os << buf;
            for (const auto& p : c.params) os << cell_text(get(p));
            os << "\n";
        };
        const std::string m = to_string(c.method);
        line(m + " AE", [](const ParamStats& p) { return p.average_estimate; });
        line(m + " MSE", [](const ParamStats& p) { return p.mse; });
        if (!c.params.empty() && c.params.front().asy_var)
            line("AsyVar-" + m, [](const ParamStats& p) { return p.asy_var.value_or(std::nan("")); });
        if (c.failures > 0) os << std::string(24, ' ') << "(" << c.failures << " failed of " << c.used + c.failures << ")\n";
    }
    return os.str();
}

namespace detail {

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.emplace_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

}  // namespace detail

/// Inverse of emit_table(..., CSV).
inline ExperimentResult parse_table_csv(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line)) throw IoError("table csv: empty document");
    const auto header = detail::split(line, ',');
    if (header.size() < 6 || header[0] != "T" || header[1] != "S" || header[2] != "method" ||
        header[3] != "statistic" || header[header.size() - 2] != "used" || header.back() != "failures")
        throw IoError("table csv: unexpected header");
    ExperimentResult result;
    result.param_names.assign(header.begin() + 4, header.end() - 2);
    const std::size_t np = result.param_names.size();
    while (std::getline(is, line)) {
        if (trim(line).empty()) continue;
        const auto f = detail::split(line, ',');
        if (f.size() != header.size()) throw IoError("table csv: row has the wrong number of fields");
        try {
            const Grid g{static_cast<int>(parse_integer(f[0])), static_cast<int>(parse_integer(f[1]))};
            const Method m = parse_method(f[2]);
            const std::string& stat = f[3];
            if (result.cells.empty() || !(result.cells.back().grid == g) || result.cells.back().method != m) {
                if (stat != "AE") throw IoError("table csv: a cell must start with its AE row");
                CellResult c;
                c.grid = g;
                c.method = m;
                c.params.assign(np, ParamStats{});
                result.cells.push_back(std::move(c));
            }
            auto& cell = result.cells.back();
            cell.used = static_cast<int>(parse_integer(f[4 + np]));
            cell.failures = static_cast<int>(parse_integer(f[5 + np]));
            for (std::size_t i = 0; i < np; ++i) {
                const double v = parse_real(f[4 + i]);
                if (stat == "AE") cell.params[i].average_estimate = v;
                else if (stat == "MSE") cell.params[i].mse = v;
                else if (stat == "AsyVar") cell.params[i].asy_var = v;
                else throw IoError("table csv: unknown statistic '" + stat + "'");
            }
        } catch (const InvalidArgument& e) {
            throw IoError(std::string("table csv: ") + e.what());
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// key=value experiment configuration

inline std::string to_string(const Grid& g) { return std::to_string(g.T) + "x" + std::to_string(g.S); }

inline Grid parse_grid(std::string_view s) {
    const auto x = s.find('x');
    if (x == std::string_view::npos) throw InvalidArgument("grid must look like TxS: '" + std::string(s) + "'");
    Grid g{static_cast<int>(parse_integer(trim(s.substr(0, x)))), static_cast<int>(parse_integer(trim(s.substr(x + 1))))};
    validate(g);
    return g;
}

/// Recognized keys: truth.A<k>, truth.B<k>, truth.lambda<k>, truth.mu<k>
/// (k = 1..p, all four required per component), noise, grids (comma list of
/// TxS), reps, seed, methods (lad,lse), threads, refinement, max_iter,
/// restarts, exclude_lse_failures (true/false). '#' starts a comment.
inline ExperimentSpec parse_experiment_config(const std::string& text) {
    ExperimentSpec spec;
    std::map<int, std::map<std::string, double>> comps;
    std::istringstream is(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(is, raw)) {
        ++lineno;
        std::string_view line = raw;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw InvalidArgument("config line " + std::to_string(lineno) + ": expected key=value");
        const std::string key(trim(line.substr(0, eq)));
        const std::string_view val = trim(line.substr(eq + 1));
        try {
            if (key.starts_with("truth.")) {
                const std::string rest = key.substr(6);
                std::string name;
                for (const char* n : {"lambda", "mu", "A", "B"})
                    if (rest.starts_with(n)) {
                        name = n;
                        break;
                    }
                if (name.empty()) throw InvalidArgument("unknown truth parameter '" + rest + "'");
                const auto k = parse_integer(rest.substr(name.size()));
                if (k < 1 || k > 8) throw InvalidArgument("component index must be 1..8");
                comps[static_cast<int>(k)][name] = parse_real(val);
            } else if (key == "noise") {
                spec.noise = parse_noise_spec(val);
            } else if (key == "grids") {
                spec.grid_list.clear();
                for (const auto& g : detail::split(val, ',')) spec.grid_list.push_back(parse_grid(trim(g)));
            } else if (key == "reps") {
                spec.replications = static_cast<int>(parse_integer(val));
            } else if (key == "seed") {
                spec.base_seed = RngSeed{static_cast<std::uint64_t>(parse_integer(val))};
            } else if (key == "methods") {
                spec.methods.clear();
                for (const auto& m : detail::split(val, ',')) spec.methods.push_back(parse_method(trim(m)));
            } else if (key == "threads") {
                spec.threads = static_cast<int>(parse_integer(val));
            } else if (key == "refinement") {
                spec.fit.refinement = static_cast<int>(parse_integer(val));
            } else if (key == "max_iter") {
                spec.fit.simplex.max_iterations = static_cast<int>(parse_integer(val));
            } else if (key == "restarts") {
                spec.fit.simplex.restarts = static_cast<int>(parse_integer(val));
            } else if (key == "exclude_lse_failures") {
                if (val != "true" && val != "false") throw InvalidArgument("expected true or false");
                spec.exclude_lse_failures = val == "true";
            } else {
                throw InvalidArgument("unknown key '" + key + "'");
            }
        } catch (const InvalidArgument& e) {
            throw InvalidArgument("config line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (comps.empty()) throw InvalidArgument("config: no truth parameters given");
    for (int k = 1; k <= static_cast<int>(comps.size()); ++k) {
        const auto it = comps.find(k);
        if (it == comps.end() || it->second.size() != 4)
            throw InvalidArgument("config: component " + std::to_string(k) + " needs A, B, lambda and mu");
        spec.truth.components.push_back({it->second.at("A"), it->second.at("B"), it->second.at("lambda"), it->second.at("mu")});
    }
    validate(spec);
    return spec;
}

/// Fully resolved configuration, parseable by parse_experiment_config.
inline std::string experiment_config_text(const ExperimentSpec& spec) {
    std::ostringstream os;
    for (std::size_t k = 0; k < spec.truth.order(); ++k) {
        const auto& c = spec.truth[k];
        const auto i = std::to_string(k + 1);
        os << "truth.A" << i << "=" << format_real(c.A) << "\n"
           << "truth.B" << i << "=" << format_real(c.B) << "\n"
           << "truth.lambda" << i << "=" << format_real(c.lambda) << "\n"
           << "truth.mu" << i << "=" << format_real(c.mu) << "\n";
    }
    os << "noise=" << to_string(spec.noise) << "\n";
    os << "grids=";
    for (std::size_t i = 0; i < spec.grid_list.size(); ++i) os << (i ? "," : "") << to_string(spec.grid_list[i]);
    os << "\nreps=" << spec.replications << "\nseed=" << spec.base_seed.value << "\nmethods=";
    for (std::size_t i = 0; i < spec.methods.size(); ++i) os << (i ? "," : "") << (spec.methods[i] == Method::LAD ? "lad" : "lse");
    os << "\nthreads=" << spec.threads << "\nrefinement=" << spec.fit.refinement
       << "\nmax_iter=" << spec.fit.simplex.max_iterations << "\nrestarts=" << spec.fit.simplex.restarts
       << "\nexclude_lse_failures=" << (spec.exclude_lse_failures ? "true" : "false") << "\n";
    return os.str();
}

}  // namespace lad2d
