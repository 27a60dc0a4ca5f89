// Command-line front end: period tables, autonomous orbits, first-order
// stability tables, forced-family continuation and the verification suite.
//
// Exit codes: 0 success, 1 verification or numerical failure, 2 invalid input.

#include "combdrive/cli/config.hpp"
#include "combdrive/combdrive.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

using namespace combdrive;
using combdrive::cli::Config;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kInvalid = 2;

// =============================================================================
// Formatting
// =============================================================================

std::string num(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

std::string seconds(double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(3) << v;
    return os.str();
}

/// Full quad-precision decimal, enough digits to round-trip.
std::string exact(const Precise &v) { return v.str(36, std::ios_base::scientific); }

std::string csv_row(const std::vector<std::string> &cells) {
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ',';
        const bool quote = cells[i].find_first_of(",\"\n") != std::string::npos;
        if (!quote) {
            out += cells[i];
            continue;
        }
        out += '"';
        for (char c : cells[i]) {
            if (c == '"') out += '"';
            out += c;
        }
        out += '"';
    }
    return out;
}

/// Writes to --out when given, otherwise to stdout.
class Sink {
  public:
    Sink(const std::string &path, bool append = false) {
        if (path.empty()) return;
        file_ = std::make_unique<std::ofstream>(path, append ? std::ios::app : std::ios::trunc);
        if (!*file_) throw InvalidParameters("cannot open output file '" + path + "'");
    }
    std::ostream &stream() { return file_ ? *file_ : std::cout; }
    void line(const std::string &s) { stream() << s << '\n' << std::flush; }
    bool is_stdout() const { return !file_; }

  private:
    std::unique_ptr<std::ofstream> file_;
};

// =============================================================================
// Shared flags
// =============================================================================

struct Flags {
    double beta = 0, v0 = 0, tv = 0;
    int m = 0, p = 0, n = 0, workers = 0;
    std::string symmetry, delta_grid, out, format, config;
    bool print_config = false;
    std::map<std::string, CLI::Option *> opts;

    bool given(const std::string &name) const {
        const auto it = opts.find(name);
        return it != opts.end() && it->second->count() > 0;
    }

    void attach(CLI::App *sub, bool pair_flags) {
        opts["beta"] = sub->add_option("--beta", beta, "Gap-normalized coupling beta");
        opts["v0"] = sub->add_option("--v0", v0, "Bias voltage V0");
        opts["tv"] = sub->add_option("--tv", tv, "Drive period Tv");
        if (pair_flags) {
            opts["m"] = sub->add_option("--m", m, "Forcing periods per orbit window");
            opts["p"] = sub->add_option("--p", p, "Oscillations per window");
            opts["n"] = sub->add_option("--n", n, "Select the (2n, 1) orbit");
            opts["symmetry"] = sub->add_option("--symmetry", symmetry, "odd, even or both");
        }
        opts["delta_grid"] =
            sub->add_option("--delta-grid", delta_grid, "Comma-separated amplitudes");
        opts["out"] = sub->add_option("--out", out, "Output path (default stdout)");
        opts["format"] = sub->add_option("--format", format, "csv or jsonl")
                             ->check(CLI::IsMember({"csv", "jsonl"}));
        opts["workers"] = sub->add_option("--workers", workers, "Worker threads");
        opts["config"] = sub->add_option("--config", config,
                                         std::string("JSON config file (default $") +
                                             cli::kConfigEnv + ")");
        sub->add_flag("--print-config", print_config, "Print the effective config and exit");
    }

    /// defaults < config file < flags.
    Config resolve() const {
        Config c;
        const auto path =
            cli::config_path(given("config") ? std::optional<std::string>(config) : std::nullopt);
        if (path) c = cli::load_config(*path, c);
        if (given("beta")) c.beta = beta;
        if (given("v0")) c.v0 = v0;
        if (given("tv")) c.tv = tv;
        if (given("m")) c.m = m;
        if (given("p")) c.p = p;
        if (given("n")) c.n = n;
        if (given("symmetry")) c.symmetry = symmetry;
        if (given("delta_grid")) c.delta_grid = cli::parse_grid(delta_grid);
        if (given("out")) c.out = out;
        if (given("format")) c.format = format;
        if (given("workers")) c.workers = workers;
        c.validate();
        return c;
    }
};

// =============================================================================
// period
// =============================================================================

int run_period(const Config &c, int grid_size) {
    const auto params = c.params();
    const auto grid = period_grid(params, grid_size);
    std::vector<PeriodPoint<double>> rows(grid.size());
    parallel_for(grid.size(), c.workers,
                 [&](std::size_t i) { rows[i] = period_point(grid[i], params); });
    Sink sink(c.out);
    if (c.format == "csv") sink.line("hbar,gap,T,T_prime");
    for (const auto &r : rows) {
        if (c.format == "csv") {
            sink.line(csv_row({num(r.hbar), num(r.gap), num(r.period), num(r.derivative)}));
        } else {
            sink.line(json{{"hbar", r.hbar}, {"gap", r.gap}, {"T", r.period}, {"T_prime", r.derivative}}
                          .dump());
        }
    }
    return kOk;
}

// =============================================================================
// orbit
// =============================================================================

int run_orbit(const Config &c, int samples, const std::string &summary_path) {
    if (c.symmetry == "both") throw InvalidParameters("orbit needs --symmetry odd or even");
    const auto [m, p] = c.pair();
    const auto q = c.params().cast<Precise>();
    const auto o = make_orbit<Precise>(parse_symmetry(c.symmetry), m, p, q);
    const auto window = o.forcing_period();
    const auto sol = integrate_orbit(o, Precise(0), window);
    const auto tr = sample_solution(sol, q, Precise(0), window, static_cast<std::size_t>(samples));
    const auto res = symmetry_residuals(o);

    Sink traj(c.out);
    traj.line("t,x,xdot,H");
    for (std::size_t k = 0; k < tr.size(); ++k) {
        traj.line(csv_row({num(to_double(tr.t[k])), num(to_double(tr.x[k])),
                           num(to_double(tr.xdot[k])), num(to_double(tr.energy[k]))}));
    }

    const json summary{{"symmetry", c.symmetry},
                       {"m", m},
                       {"p", p},
                       {"n", o.n},
                       {"hbar", to_double(o.hbar())},
                       {"gap", to_double(o.level.gap)},
                       {"init", to_double(o.init)},
                       {"init_exact", exact(o.init)},
                       {"minimal_period", to_double(o.minimal_period)},
                       {"zeros", res.zeros},
                       {"symmetry_residual", to_double(res.worst_symmetry())},
                       {"return_residual", to_double(res.return_state)},
                       {"energy_drift", to_double(res.energy_drift)},
                       {"period_error", to_double(res.period_error)},
                       {"tangency_warning", res.tangency_warning}};
    // The summary goes to stderr when the trajectory occupies stdout.
    if (!summary_path.empty()) {
        Sink s(summary_path);
        s.line(summary.dump(2));
    } else if (traj.is_stdout()) {
        std::cerr << summary.dump(2) << '\n';
    } else {
        std::cout << summary.dump(2) << '\n';
    }
    return kOk;
}

// =============================================================================
// stability
// =============================================================================

int run_stability(const Config &c, int m_max) {
    const auto params = c.params();
    std::vector<std::pair<int, int>> pairs;
    if (m_max > 0) {
        pairs = admissible_pairs(m_max, params);
    } else {
        const auto mp = c.pair();
        require_admissible(mp.first, mp.second, params);
        pairs.push_back(mp);
    }
    struct Row {
        int m, p;
        Symmetry sym;
        TracePrime<double> tp;
        std::optional<double> a_n;
        StabilityPrediction pred, first;
    };
    std::vector<std::pair<std::pair<int, int>, Symmetry>> jobs;
    for (const auto &mp : pairs) {
        for (auto s : c.symmetries()) jobs.push_back({mp, s});
    }
    std::vector<std::optional<Row>> rows(jobs.size());
    parallel_for(jobs.size(), c.workers, [&](std::size_t i) {
        const auto [mp, s] = jobs[i];
        const auto tp = tau_prime(s, mp.first, mp.second, params);
        std::optional<double> a;
        if (tp.n > 0 && mp.second == 1) a = a_coefficient(tp.n, params, s);
        rows[i] = Row{mp.first, mp.second, s, tp, a, predict_stability(s, mp.first, mp.second, params),
                      first_order_stability(tp)};
    });

    Sink sink(c.out);
    if (c.format == "csv") {
        sink.line("m,p,n,symmetry,tau_prime_general,tau_prime_cosine,tau_prime_quarter,scale,"
                  "relative_size,A_n,T_prime,prediction,first_order,frequency_condition");
    }
    for (const auto &r : rows) {
        const auto &tp = r->tp;
        const std::string q = tp.quarter ? num(*tp.quarter) : "";
        const std::string a = r->a_n ? num(*r->a_n) : "";
        if (c.format == "csv") {
            sink.line(csv_row({std::to_string(r->m), std::to_string(r->p), std::to_string(tp.n),
                               to_string(r->sym), num(tp.general), num(tp.cosine), q, num(tp.scale),
                               num(tp.relative_size()), a, num(tp.period_derivative),
                               to_string(r->pred.kind), to_string(r->first.kind),
                               r->pred.frequency_condition ? "true" : "false"}));
        } else {
            json j{{"m", r->m},
                   {"p", r->p},
                   {"n", tp.n},
                   {"symmetry", to_string(r->sym)},
                   {"tau_prime",
                    {{"general", tp.general},
                     {"cosine", tp.cosine},
                     {"quarter", tp.quarter ? json(*tp.quarter) : json(nullptr)}}},
                   {"scale", tp.scale},
                   {"relative_size", tp.relative_size()},
                   {"A_n", r->a_n ? json(*r->a_n) : json(nullptr)},
                   {"T_prime", tp.period_derivative},
                   {"prediction", to_string(r->pred.kind)},
                   {"first_order", to_string(r->first.kind)},
                   {"frequency_condition", r->pred.frequency_condition}};
            sink.line(j.dump());
        }
    }
    return kOk;
}

// =============================================================================
// continue
// =============================================================================

json point_json(const FamilyPoint<Precise> &pt) {
    const auto &o = pt.orbit;
    return json{{"type", "point"},
                {"symmetry", to_string(o.symmetry)},
                {"m", o.m},
                {"p", o.p},
                {"delta", to_double(o.delta)},
                {"init", to_double(o.init)},
                {"init_exact", exact(o.init)},
                {"trace", to_double(o.trace())},
                {"verdict", to_string(pt.verdict.kind)},
                {"residuals",
                 {{"shooting", to_double(o.shooting_residual)},
                  {"return", to_double(o.return_residual)},
                  {"determinant", to_double(abs(o.monodromy.determinant - 1))}}},
                {"iterations", o.iterations}};
}

std::string point_csv(const json &j) {
    if (j["type"] == "point") {
        return csv_row({"point", j["symmetry"], std::to_string(j["m"].get<int>()),
                        std::to_string(j["p"].get<int>()), num(j["delta"]), j["init_exact"],
                        num(j["trace"]), j["verdict"], num(j["residuals"]["shooting"]),
                        num(j["residuals"]["return"]), "", "", ""});
    }
    if (j["type"] == "slope") {
        return csv_row({"slope", j["symmetry"], std::to_string(j["m"].get<int>()),
                        std::to_string(j["p"].get<int>()), num(j["h"]), "", "", "", "", "",
                        num(j["analytic"]), num(j["fd"]),
                        j["relative_error"].is_null() ? "" : num(j["relative_error"])});
    }
    return csv_row({"stop", j["symmetry"], std::to_string(j["m"].get<int>()),
                    std::to_string(j["p"].get<int>()), num(j["failed_delta"]), "", "", j["reason"],
                    "", "", "", "", ""});
}

/// Last accepted point per symmetry in a previous JSON-lines run.
std::map<std::string, ResumePoint<Precise>> read_resume(const std::string &path, int m, int p) {
    std::ifstream in(path);
    if (!in) throw InvalidParameters("cannot open resume file '" + path + "'");
    std::map<std::string, ResumePoint<Precise>> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception &e) {
            throw InvalidParameters("resume file line " + std::to_string(lineno) +
                                    " is not JSON (resume needs --format jsonl output)");
        }
        if (j.value("type", "") != "point") continue;
        if (j.value("m", 0) != m || j.value("p", 0) != p) continue;
        const Precise delta(j["delta"].get<double>());
        const Precise init(j["init_exact"].get<std::string>());
        out[j["symmetry"].get<std::string>()] = {delta, init};
    }
    return out;
}

int run_continue(const Config &c, const std::string &resume_path, bool slope) {
    const auto [m, p] = c.pair();
    const auto params = c.params();
    const auto q = params.cast<Precise>();
    require_admissible(m, p, params);
    std::vector<Precise> grid;
    for (double d : c.delta_grid) grid.push_back(Precise(d));

    std::map<std::string, ResumePoint<Precise>> resume;
    if (!resume_path.empty()) resume = read_resume(resume_path, m, p);
    const bool append = !resume_path.empty() && resume_path == c.out;

    const auto syms = c.symmetries();
    Sink sink(c.out, append);
    if (c.format == "csv" && !append) {
        sink.line("type,symmetry,m,p,delta,init,trace,verdict,shooting_residual,return_residual,"
                  "analytic_slope,fd_slope,relative_error");
    }
    auto emit = [&](const json &j) { sink.line(c.format == "csv" ? point_csv(j) : j.dump()); };

    // One family per symmetry; with several workers the families run in
    // parallel and are written in a fixed order once complete.
    std::vector<std::vector<json>> lines(syms.size());
    bool failed = false;
    const bool stream = c.workers <= 1 || syms.size() == 1;
    parallel_for(syms.size(), stream ? 1 : c.workers, [&](std::size_t i) {
        const Symmetry s = syms[i];
        auto out = [&](const json &j) {
            if (stream) emit(j);
            else lines[i].push_back(j);
        };
        std::optional<ResumePoint<Precise>> rp;
        if (const auto it = resume.find(to_string(s)); it != resume.end()) rp = it->second;
        const auto fam = continue_family<Precise>(s, m, p, q, grid, ContinuationOptions<Precise>{}, rp,
                                                  [&](const FamilyPoint<Precise> &pt) {
                                                      out(point_json(pt));
                                                  });
        if (!fam.complete) {
            failed = true;
            out(json{{"type", "stop"},
                     {"symmetry", to_string(s)},
                     {"m", m},
                     {"p", p},
                     {"failed_delta", *fam.failed_delta},
                     {"reason", fam.failure}});
        }
        if (!slope) return;
        const auto tp = tau_prime(s, m, p, params);
        json sj{{"type", "slope"}, {"symmetry", to_string(s)}, {"m", m}, {"p", p},
                {"analytic", tp.value()}, {"scale", tp.scale}, {"delicate", tp.delicate}};
        try {
            const auto fd = trace_slope_refined<Precise>(s, m, p, q);
            const double f = to_double(fd.slope);
            sj["fd"] = f;
            sj["h"] = to_double(fd.h);
            sj["relative_error"] =
                tp.delicate ? json(nullptr) : json(std::abs(f - tp.value()) / std::abs(tp.value()));
        } catch (const ConvergenceError &e) {
            sj["fd"] = nullptr;
            sj["h"] = nullptr;
            sj["relative_error"] = nullptr;
            sj["error"] = e.what();
            failed = true;
        }
        out(sj);
    });
    if (!stream) {
        for (const auto &block : lines) {
            for (const auto &j : block) emit(j);
        }
    }
    return failed ? kFailure : kOk;
}

// =============================================================================
// verify
// =============================================================================

json criterion_json(const CriterionResult &r) {
    json checks = json::array();
    for (const auto &ck : r.report.checks) {
        checks.push_back({{"name", ck.name},
                          {"passed", ck.passed},
                          {"measured", ck.measured},
                          {"threshold", ck.threshold},
                          {"detail", ck.detail}});
    }
    return json{{"criterion", r.id},
                {"title", r.title},
                {"passed", r.passed()},
                {"seconds", r.seconds},
                {"budget", r.budget},
                {"within_budget", r.within_budget()},
                {"error", r.error},
                {"checks", checks}};
}

int run_verify(const Config &c, const std::string &criteria, bool loosened, bool control,
               bool details) {
    VerifyOptions opt;
    opt.workers = c.workers;
    opt.loosened = loosened;
    opt.delta_grid = c.delta_grid;
    if (!criteria.empty()) {
        for (double v : cli::parse_grid(criteria)) {
            const int id = static_cast<int>(v);
            if (id != v || id < 1 || id > static_cast<int>(criterion_specs().size())) {
                throw InvalidParameters("unknown criterion '" + num(v) + "'");
            }
            opt.only.insert(id);
        }
    }
    const auto params = c.params();
    Sink sink(c.out);
    const bool csv = c.format == "csv";
    if (csv) sink.line("criterion,status,seconds,budget,failed_checks,total_checks,title");

    auto print_checks = [&](const Report &rep) {
        for (const auto &ck : rep.checks) {
            if (details || !ck.passed) {
                sink.line(csv_row({"", ck.passed ? "  ok" : "  FAIL", num(ck.measured),
                                   num(ck.threshold), "", "", ck.name + (ck.detail.empty() ? "" : "; " + ck.detail)}));
            }
        }
    };

    const auto result = verify_all(params, opt, [&](const CriterionResult &r) {
        if (csv) {
            sink.line(csv_row({std::to_string(r.id), r.passed() ? "PASS" : "FAIL", seconds(r.seconds),
                               num(r.budget), std::to_string(r.report.failures()),
                               std::to_string(r.report.checks.size()),
                               r.title + (r.error.empty() ? "" : "; error: " + r.error)}));
            print_checks(r.report);
        } else {
            sink.line(criterion_json(r).dump());
        }
    });

    bool ok = result.passed();
    if (control && !loosened) {
        const auto start = std::chrono::steady_clock::now();
        const auto rep = negative_control(params, opt);
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        ok = ok && rep.passed();
        if (csv) {
            sink.line(csv_row({"control", rep.passed() ? "PASS" : "FAIL", seconds(secs), "0",
                               std::to_string(rep.failures()), std::to_string(rep.checks.size()),
                               "negative control: loosened integrator is rejected"}));
            print_checks(rep);
        } else {
            json checks = json::array();
            for (const auto &ck : rep.checks) {
                checks.push_back({{"name", ck.name}, {"passed", ck.passed}, {"measured", ck.measured}});
            }
            sink.line(json{{"criterion", "control"}, {"passed", rep.passed()}, {"seconds", secs},
                           {"checks", checks}}
                          .dump());
        }
    }
    return ok ? kOk : kFailure;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Comb-drive actuator: periods, orbits, Hill stability and forced families"};
    app.require_subcommand(1);

    Flags flags;

    auto *period_cmd = app.add_subcommand("period", "Period T and T' on a log-spaced energy grid");
    flags.attach(period_cmd, false);
    int grid_size = 100;
    period_cmd->add_option("--grid-size", grid_size, "Number of energies")->check(CLI::Range(10, 100000));

    auto *orbit_cmd = app.add_subcommand("orbit", "Autonomous (m, p) orbit over one forcing window");
    Flags orbit_flags;
    orbit_flags.attach(orbit_cmd, true);
    int samples = 1001;
    std::string summary_path;
    orbit_cmd->add_option("--samples", samples, "Trajectory samples")->check(CLI::Range(2, 10000000));
    orbit_cmd->add_option("--summary", summary_path, "Write the JSON summary to this file");

    auto *stab_cmd = app.add_subcommand("stability", "First-order trace derivative table");
    Flags stab_flags;
    stab_flags.attach(stab_cmd, true);
    int m_max = 0;
    stab_cmd->add_option("--m-max", m_max, "Tabulate every admissible pair with m <= m-max");

    auto *cont_cmd = app.add_subcommand("continue", "Continue forced families in delta");
    Flags cont_flags;
    cont_flags.attach(cont_cmd, true);
    std::string resume_path;
    bool no_slope = false;
    cont_cmd->add_option("--resume", resume_path, "Resume from a previous JSON-lines run");
    cont_cmd->add_flag("--no-slope", no_slope, "Skip the analytic vs finite-difference slope");

    auto *ver_cmd = app.add_subcommand("verify", "Run the verification criteria");
    Flags ver_flags;
    ver_flags.attach(ver_cmd, false);
    std::string criteria;
    bool loosened = false, no_control = false, details = false;
    ver_cmd->add_option("--criteria", criteria, "Comma-separated criterion ids (default all)");
    ver_cmd->add_flag("--loosen", loosened,
                      "Use a loose integrator in the orbit and monodromy criteria (must fail)");
    ver_cmd->add_flag("--no-control", no_control, "Skip the negative control");
    ver_cmd->add_flag("--details", details, "Print every check, not only failures");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return kInvalid;
    }

    try {
        const Flags *f = period_cmd->parsed()  ? &flags
                         : orbit_cmd->parsed() ? &orbit_flags
                         : stab_cmd->parsed()  ? &stab_flags
                         : cont_cmd->parsed()  ? &cont_flags
                                               : &ver_flags;
        const Config c = f->resolve();
        if (f->print_config) {
            std::cout << cli::to_json(c).dump(2) << '\n';
            return kOk;
        }
        if (period_cmd->parsed()) return run_period(c, grid_size);
        if (orbit_cmd->parsed()) return run_orbit(c, samples, summary_path);
        if (stab_cmd->parsed()) return run_stability(c, m_max);
        if (cont_cmd->parsed()) return run_continue(c, resume_path, !no_slope);
        return run_verify(c, criteria, loosened, !no_control, details);
    } catch (const InvalidParameters &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInvalid;
    } catch (const InadmissibleError &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInvalid;
    } catch (const RangeError &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInvalid;
    } catch (const DomainError &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInvalid;
    } catch (const std::exception &e) {
        std::cerr << "failure: " << e.what() << '\n';
        return kFailure;
    }
}
