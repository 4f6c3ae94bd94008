#include "run.hpp"

#include "sidekit/errors.hpp"
#include "sidekit/estimate.hpp"
#include "sidekit/simulate.hpp"
#include "sidekit/stability.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace sidekit::cli {

namespace fs = std::filesystem;

namespace {

std::string num(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string vec_text(const Vec& v)
{
    std::string s;
    for (Index i = 0; i < v.size(); ++i) {
        s += (i ? " " : "") + num(v(i));
    }
    return s;
}

template <class T>
const T& require(const std::optional<T>& v, const char* key, const char* section, Task task)
{
    if (!v) {
        throw ConfigError(std::string("missing key '") + key + "' in [" + section +
                              "] required by task " + task_name(task),
                          0, key);
    }
    return *v;
}

class Artifacts {
public:
    explicit Artifacts(const RunConfig& cfg) : dir_(cfg.output.dir.value_or("sidekit-out"))
    {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec) {
            throw std::runtime_error("cannot create output directory '" + dir_.string() +
                                     "': " + ec.message());
        }
    }

    template <class Writer>
    void write(const std::string& name, Writer&& writer) const
    {
        const fs::path path = dir_ / name;
        std::ofstream os(path, std::ios::binary);
        if (!os) {
            throw std::runtime_error("cannot open '" + path.string() + "' for writing");
        }
        writer(os);
        os.flush();
        if (!os) {
            throw std::runtime_error("write failed for '" + path.string() + "'");
        }
    }

    void text(const std::string& name, const std::string& body) const
    {
        write(name, [&](std::ostream& os) { os << body; });
    }

private:
    fs::path dir_;
};

ImpulseNoise impulse_noise(const RunConfig& cfg)
{
    return cfg.numeric.impulse_noise.value_or("xi") == "brownian" ? ImpulseNoise::BrownianIncrement
                                                                  : ImpulseNoise::Xi;
}

std::string header(const RunConfig& cfg, Task task)
{
    std::ostringstream os;
    os << "task: " << task_name(task) << '\n';
    if (cfg.numeric.seed) {
        os << "seed: " << *cfg.numeric.seed << '\n';
    }
    return os.str();
}

int do_simulate(const RunConfig& cfg, const Artifacts& out, std::string& report)
{
    const Task task = Task::Simulate;
    const LinearSde sde = linear_system(cfg);
    const Vec x0 = initial_state(cfg, sde.dim());
    const double dt = require(cfg.numeric.dt, "dt", "numeric", task);
    const double horizon = require(cfg.numeric.horizon, "T", "numeric", task);

    CpsOptions opts;
    opts.inner_substeps = cfg.numeric.inner_substeps.value_or(32);
    opts.impulse_noise = impulse_noise(cfg);
    opts.integration = cfg.numeric.integration.value_or("identity") == "separate"
                           ? CpsIntegration::Separate
                           : CpsIntegration::Identity;
    opts.record_substeps = cfg.output.substeps.value_or(true);
    const double delta = opts.impulse_noise == ImpulseNoise::BrownianIncrement
                             ? dt / static_cast<double>(opts.inner_substeps)
                             : dt;
    const NoisePlan plan(cfg.numeric.seed.value_or(1), 0, sde.noise_dim(), delta, horizon);
    const HybridTrajectory tr = simulate_cps(sde, x0, dt, horizon, plan, opts);
    out.write("trajectory.csv", [&](std::ostream& os) { write_csv(os, tr); });

    double plateau = 0.0;
    for (const auto& s : tr.samples) {
        const Vec gap = s.x - s.y - s.cyber;
        plateau = std::max(plateau, gap.lpNorm<Eigen::Infinity>() / (1.0 + s.cyber.lpNorm<Eigen::Infinity>()));
    }
    const auto& last = tr.samples.back();
    std::ostringstream os;
    os << header(cfg, task) << "dimension: " << sde.dim() << '\n'
       << "noise_channels: " << sde.noise_dim() << '\n'
       << "dt: " << num(dt) << '\n'
       << "T: " << num(horizon) << '\n'
       << "impulses: " << tr.impulses.size() << '\n'
       << "rows: " << tr.samples.size() << '\n'
       << "final_t: " << num(last.t) << '\n'
       << "final_x: " << vec_text(last.x) << '\n'
       << "final_y: " << vec_text(last.y) << '\n'
       << "final_X: " << vec_text(last.cyber) << '\n'
       << "max_plateau_deviation: " << num(plateau) << '\n';
    report = os.str();
    return kExitOk;
}

int do_analyze(const RunConfig& cfg, const Artifacts& out, std::string& report)
{
    const LinearSde sde = linear_system(cfg);
    const StabilityCertificate cert = cfg.numeric.dt_bar
                                          ? cp_lyapunov_feasible(sde, *cfg.numeric.dt_bar)
                                          : lyapunov_ito_feasible(sde);
    out.text("certificate.txt", to_text(cert));
    std::ostringstream os;
    os << header(cfg, Task::Analyze) << "dimension: " << sde.dim() << '\n'
       << "verdict: " << (cert.feasible() ? "feasible" : "infeasible") << '\n'
       << "margin: " << num(cert.margin) << '\n';
    if (cert.dt_bar) {
        os << "dt_bar: " << num(*cert.dt_bar) << '\n';
    }
    if (cfg.numeric.dt) {
        const StabilityCertificate d = discrete_ms_stable(sde, *cfg.numeric.dt);
        os << "discrete_dt: " << num(*cfg.numeric.dt) << '\n'
           << "discrete_verdict: " << (d.feasible() ? "feasible" : "infeasible") << '\n';
    }
    report = os.str();
    return cert.feasible() ? kExitOk : kExitNegative;
}

int do_max_stepsize(const RunConfig& cfg, const Artifacts& out, std::string& report)
{
    const LinearSde sde = linear_system(cfg);
    const StepsizeBound bound = max_stepsize(sde, cfg.numeric.tol.value_or(1e-9));
    const StabilityCertificate ito = lyapunov_ito_feasible(sde);
    std::ostringstream cert;
    cert << to_text(ito) << "max_dt_bar: " << (bound.feasible ? num(bound.dt_bar) : "none") << '\n';
    if (bound.capped) {
        cert << "capped: true\n";
    }
    out.text("certificate.txt", cert.str());

    std::ostringstream os;
    os << header(cfg, Task::MaxStepsize) << "dimension: " << sde.dim() << '\n'
       << "verdict: " << (bound.feasible ? "feasible" : "infeasible") << '\n';
    if (bound.feasible) {
        os << "max_dt_bar: " << num(bound.dt_bar) << '\n';
    }
    if (bound.capped) {
        os << "capped: true\n";
    }
    if (sde.is_scalar()) {
        const double mu = sde.noise_dim() ? sde.gs[0](0, 0) : 0.0;
        const auto closed = scalar_max_stepsize(sde.f(0, 0), mu);
        os << "closed_form: " << (closed ? num(*closed) : "none") << '\n';
    }
    report = os.str();
    return bound.feasible ? kExitOk : kExitNegative;
}

int do_exponent(const RunConfig& cfg, const Artifacts& out, std::string& report)
{
    const Task task = Task::Exponent;
    const LinearSde sde = linear_system(cfg);
    const Vec x0 = initial_state(cfg, sde.dim());
    const double p = require(cfg.numeric.p, "p", "numeric", task);
    const double horizon = require(cfg.numeric.horizon, "T", "numeric", task);
    const auto m = require(cfg.numeric.trajectories, "trajectories", "numeric", task);
    EnsembleOptions opts;
    opts.dt = require(cfg.numeric.dt, "dt", "numeric", task);
    opts.seed = cfg.numeric.seed.value_or(1);
    opts.threads = static_cast<unsigned>(cfg.numeric.threads.value_or(0));

    const Ensemble ens = simulate_ensemble(sde, x0, horizon, static_cast<std::size_t>(m), opts);
    const ExponentEstimate moment = moment_exponent(ens, p, cfg.numeric.window.value_or(0.5));
    const ExponentEstimate pathwise = as_exponent(ens);
    out.write("exponent_fit.csv", [&](std::ostream& os) { write_exponent_csv(os, moment); });

    std::ostringstream os;
    os << header(cfg, task) << "trajectories: " << m << '\n'
       << "p: " << num(p) << '\n'
       << "[moment]\n"
       << to_text(moment) << "[almost_sure]\n"
       << to_text(pathwise);
    report = os.str();
    return kExitOk;
}

int do_converge(const RunConfig& cfg, const Artifacts& out, std::string& report)
{
    const Task task = Task::Converge;
    const LinearSde sde = linear_system(cfg);
    const Vec x0 = initial_state(cfg, sde.dim());
    const double horizon = require(cfg.numeric.horizon, "T", "numeric", task);
    const auto m = require(cfg.numeric.trajectories, "trajectories", "numeric", task);
    if (cfg.numeric.levels.empty()) {
        throw ConfigError("missing key 'levels' in [numeric] required by task converge", 0,
                          "levels");
    }
    std::vector<double> dts;
    for (auto l : cfg.numeric.levels) {
        dts.push_back(std::ldexp(1.0, static_cast<int>(-l)));
    }
    StrongErrorOptions opts;
    opts.reference_refinement = static_cast<int>(cfg.numeric.refinement.value_or(2));
    opts.threads = static_cast<unsigned>(cfg.numeric.threads.value_or(0));
    const StrongErrorStudy study = strong_error_sup(sde, x0, horizon, dts, static_cast<std::size_t>(m),
                                                    cfg.numeric.seed.value_or(1), opts);
    out.write("errors.csv", [&](std::ostream& os) { write_errors_csv(os, study); });
    report = header(cfg, task) + "trajectories: " + std::to_string(m) + '\n' + to_text(study);
    return kExitOk;
}

int do_cps_demo(const RunConfig& cfg, const Artifacts& out, std::string& report)
{
    const Task task = Task::CpsDemo;
    const double a = require(cfg.system.a, "a", "system", task);
    const double k_p = require(cfg.system.k_p, "k_p", "system", task);
    const double dt = require(cfg.numeric.dt, "dt", "numeric", task);
    const double horizon = require(cfg.numeric.horizon, "T", "numeric", task);
    const Vec x0 = initial_state(cfg, 1);
    const auto samples = static_cast<std::size_t>(cfg.numeric.inner_substeps.value_or(8));

    std::ostringstream os;
    os << header(cfg, task) << "a: " << num(a) << '\n'
       << "k_p: " << num(k_p) << '\n'
       << "dt: " << num(dt) << '\n';
    try {
        const ScalarCpsDemo demo = simulate_scalar_cps_demo(a, k_p, x0(0), dt, horizon, samples);
        out.write("trajectory.csv", [&](std::ostream& s) { write_csv(s, demo.as_trajectory()); });
        os << "max_stepsize: " << num(demo.max_stepsize) << '\n'
           << "steps: " << demo.plateaus.size() - 1 << '\n';
        if (demo.plateaus.size() > 1) {
            os << "X_1: " << num(demo.plateaus[1]) << '\n';
        }
        os << "x_dt: " << num(demo.verdict.x_dt) << '\n'
           << "first_step_bound: " << num(demo.verdict.bound) << '\n'
           << "strictly_decreasing: " << (demo.verdict.strictly_decreasing ? "yes" : "no") << '\n'
           << "sign_preserved: " << (demo.verdict.sign_preserved ? "yes" : "no") << '\n'
           << "verdict: " << (demo.verdict.ok() ? "stable" : "unstable") << '\n';
        report = os.str();
        return demo.verdict.ok() ? kExitOk : kExitNegative;
    } catch (const StepsizeTooLarge& e) {
        os << "verdict: stepsize too large\n"
           << "detail: " << e.what() << '\n';
        report = os.str();
        return kExitNegative;
    }
}

} // namespace

RunConfig apply(RunConfig cfg, const Overrides& o)
{
    if (o.task) {
        if (cfg.task && *cfg.task != *o.task) {
            throw ConfigError("config selects task '" + task_name(*cfg.task) +
                                  "' but the command line selects '" + task_name(*o.task) + "'",
                              0, "kind");
        }
        cfg.task = o.task;
    }
    if (o.seed) {
        cfg.numeric.seed = o.seed;
    }
    if (o.trajectories) {
        cfg.numeric.trajectories = o.trajectories;
    }
    if (o.out) {
        cfg.output.dir = o.out;
    }
    return cfg;
}

int run(const RunConfig& cfg, std::ostream& log)
{
    if (!cfg.task) {
        throw ConfigError("no task selected: give a subcommand or [task] kind", 0, "kind");
    }
    const Artifacts out(cfg);
    std::string report;
    int code = kExitOk;
    switch (*cfg.task) {
    case Task::Simulate:
        code = do_simulate(cfg, out, report);
        break;
    case Task::Analyze:
        code = do_analyze(cfg, out, report);
        break;
    case Task::MaxStepsize:
        code = do_max_stepsize(cfg, out, report);
        break;
    case Task::Exponent:
        code = do_exponent(cfg, out, report);
        break;
    case Task::Converge:
        code = do_converge(cfg, out, report);
        break;
    case Task::CpsDemo:
        code = do_cps_demo(cfg, out, report);
        break;
    }
    report += "exit_code: " + std::to_string(code) + '\n';
    out.text("report.txt", report);
    log << report;
    return code;
}

int run_guarded(const RunConfig& cfg, std::ostream& log, std::ostream& err)
{
    try {
        return run(cfg, log);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const NonFinite& e) {
        err << "diverged: " << e.what() << " (step " << e.step() << ")\n";
        return kExitNegative;
    } catch (const std::invalid_argument& e) {
        err << "invalid input: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const Error& e) {
        err << "invalid input: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitInvalid;
    }
}

} // namespace sidekit::cli
