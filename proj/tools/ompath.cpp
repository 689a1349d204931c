// Command-line front end: one subcommand per experiment.

#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ompath/io.hpp"
#include "ompath/pinn.hpp"
#include "ompath/sde.hpp"
#include "ompath/shooting.hpp"
#include "ompath/structure.hpp"
#include "ompath/svg.hpp"
#include "ompath/sweep.hpp"

#ifndef OMPATH_DEFAULT_CONFIG
#define OMPATH_DEFAULT_CONFIG "config/carbon_params.json"
#endif

namespace fs = std::filesystem;
using namespace ompath;

namespace {

struct Common {
    std::string config = OMPATH_DEFAULT_CONFIG;
    std::uint64_t seed = 1;
    std::string out = "out";
    unsigned workers = default_workers();
    std::optional<double> dt;
    std::optional<std::string> scheme;
};

struct Options {
    Common common;
    std::optional<double> nu;
    double horizon = 3.0;
    double epsilon = 0.5;
    std::size_t targets = 3600;
    std::string t_range = "1:11";
    std::size_t t_count = 200;
    std::string axis = "nu";
    std::string values = "0:0.9:0.1";
    bool refine = false;
    double noise_scale = 1.0;
    std::size_t runs = 1000;
    std::size_t samples = 2000;
    double margin = 5.0;
    std::string data;
    std::string model;
    std::string path;
    std::optional<std::size_t> target_index;
    std::string target;
    std::size_t epochs = 0;  // 0: module default
    std::size_t pilot = 200;
};

void add_common(CLI::App* app, Common& c)
{
    app->add_option("--config", c.config, "parameter JSON");
    app->add_option("--seed", c.seed, "master seed");
    app->add_option("--out", c.out, "output directory");
    app->add_option("--workers", c.workers, "parallel workers")->check(CLI::PositiveNumber);
    app->add_option("--dt", c.dt, "integration step")->check(CLI::PositiveNumber);
    app->add_option("--scheme", c.scheme, "euler or rk4")->check(CLI::IsMember({"euler", "rk4"}));
}

class Run {
public:
    Run(std::string command, const Options& o, int argc, char** argv)
        : o_(o), start_(std::chrono::steady_clock::now())
    {
        manifest_.command = std::move(command);
        for (int i = 0; i < argc; ++i) manifest_.argv.emplace_back(argv[i]);
        manifest_.config_path = o.common.config;
        manifest_.seed = o.common.seed;
        manifest_.out_dir = o.common.out;
        fs::create_directories(o.common.out);
    }

    CarbonParams params()
    {
        CarbonParams p = load_params(o_.common.config);
        if (o_.nu) p.nu = *o_.nu;
        p.validate();
        manifest_.parameters["model"] = params_to_json(p);
        return p;
    }

    fs::path file(const std::string& name)
    {
        manifest_.outputs.push_back(name);
        return fs::path(o_.common.out) / name;
    }

    Json& settings() { return manifest_.parameters; }

    Run(const Run&) = delete;
    Run& operator=(const Run&) = delete;

    // A run that unwinds before finish() still leaves a manifest behind.
    ~Run()
    {
        if (finished_) return;
        manifest_.status = "failed";
        try {
            write_manifest();
        } catch (...) {
        }
    }

    void finish(bool ok = true)
    {
        if (!ok) manifest_.status = "failed";
        write_manifest();
        finished_ = true;
    }

private:
    void write_manifest()
    {
        manifest_.wall_clock_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        write_json(fs::path(o_.common.out) / "manifest.json", manifest_.to_json());
    }

    const Options& o_;
    bool finished_ = false;
    RunManifest manifest_;
    std::chrono::steady_clock::time_point start_;
};

ShootConfig shoot_config(const Options& o)
{
    ShootConfig cfg;
    cfg.epsilon = o.epsilon;
    cfg.n_targets = o.targets;
    cfg.n_samples = o.samples;
    cfg.annulus_margin = o.margin;
    cfg.pilot_samples = o.pilot;
    cfg.refine = o.refine;
    cfg.workers = o.common.workers;
    if (o.common.dt) cfg.dt = *o.common.dt;
    if (o.common.scheme) cfg.scheme = parse_scheme(*o.common.scheme);
    if (o.epochs > 0) cfg.epochs = o.epochs;
    cfg.validate();
    return cfg;
}

Json shoot_json(const ShootConfig& c)
{
    return Json{{"epsilon", c.epsilon},     {"n_targets", c.n_targets},     {"n_samples", c.n_samples},
                {"dt", c.dt},               {"scheme", to_string(c.scheme)}, {"annulus_margin", c.annulus_margin},
                {"pilot_samples", c.pilot_samples}, {"epochs", c.epochs},     {"learning_rate", c.learning_rate},
                {"refine", c.refine}};
}

std::vector<double> column(const CsvTable& t, const std::string& name)
{
    std::vector<double> v;
    const std::size_t k = t.column(name);
    for (const auto& r : t.rows) v.push_back(r[k]);
    return v;
}

// ---- plots, always from the CSV files already on disk --------------------------

void plot_phase(const fs::path& stable, const fs::path& unstable, const fs::path& traj, const Json& fp,
                const fs::path& svg)
{
    const CsvTable s = read_csv(stable), u = read_csv(unstable), t = read_csv(traj);
    SvgPlot p("Phase portrait", "c (umol/kg)", "w (umol/kg)");
    const auto run = column(t, "run");
    const auto tc = column(t, "c"), tw = column(t, "w");
    for (double r = 0; ; r += 1) {
        std::vector<double> x, y;
        for (std::size_t i = 0; i < run.size(); ++i) {
            if (run[i] == r) {
                x.push_back(tc[i]);
                y.push_back(tw[i]);
            }
        }
        if (x.empty()) break;
        p.line(x, y, "#bbbbbb");
    }
    p.line(column(s, "c"), column(s, "w"), "#1f77b4", "stable cycle");
    p.line(column(u, "c"), column(u, "w"), "#e6a700", "unstable cycle", true);
    p.points({fp["c"].get<double>()}, {fp["w"].get<double>()}, "#d62728", "fixed point", 4.0);
    p.write(svg);
}

void plot_paths(const fs::path& cycle_csv, const std::vector<std::pair<fs::path, std::string>>& paths,
                const std::string& title, const fs::path& svg)
{
    SvgPlot p(title, "c (umol/kg)", "w (umol/kg)");
    if (!cycle_csv.empty()) {
        const CsvTable c = read_csv(cycle_csv);
        p.line(column(c, "c"), column(c, "w"), "#1f77b4", "stable cycle");
    }
    const char* colors[] = {"#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
    std::size_t k = 0;
    for (const auto& [file, label] : paths) {
        const CsvTable t = read_csv(file);
        p.line(column(t, "c"), column(t, "w"), colors[k++ % 4], label);
    }
    p.write(svg);
}

// ---- commands ------------------------------------------------------------------

LimitCycle write_structure(Run& run, const CarbonStructure& st, const CarbonModel& m)
{
    write_json(run.file("fixed_point.json"), fixed_point_json(st.fixed_point));
    write_cycle_csv(run.file("stable_cycle.csv"), st.stable_cycle);
    write_cycle_csv(run.file("unstable_cycle.csv"), st.unstable_cycle);
    const std::size_t k = steepest_index(m, st.stable_cycle);
    write_json(run.file("cycles.json"),
               Json{{"stable", {{"period", st.stable_cycle.period}, {"samples", st.stable_cycle.points.size()},
                                {"closure_gap", st.stable_cycle.closure_gap}}},
                    {"unstable", {{"period", st.unstable_cycle.period},
                                  {"samples", st.unstable_cycle.points.size()},
                                  {"closure_gap", st.unstable_cycle.closure_gap}}},
                    {"nested", encloses(st.unstable_cycle.points, st.fixed_point.location)
                                   && encloses(st.stable_cycle.points, st.unstable_cycle.points.front())},
                    {"steepest_index", k},
                    {"steepest_state", {st.stable_cycle.points[k].x, st.stable_cycle.points[k].y}}});
    return st.stable_cycle;
}

int cmd_analyze(const Options& o, int argc, char** argv)
{
    Run run("analyze", o, argc, argv);
    const CarbonParams p = run.params();
    const CarbonModel m(p);
    const CarbonStructure st = carbon_structure(m, o.targets);
    write_structure(run, st, m);

    // A few forward trajectories for the portrait.
    const State z = st.fixed_point.location;
    const std::vector<State> starts{{z.x + 5.0, z.y}, {2.5 * z.x, z.y}, {0.3 * z.x, z.y + 600.0}};
    const double dt = o.common.dt.value_or(1e-3);
    const Scheme scheme = parse_scheme(o.common.scheme.value_or("rk4"));
    {
        CsvWriter w(run.file("trajectories.csv"), {"run", "t", "c", "w"});
        for (std::size_t r = 0; r < starts.size(); ++r) {
            const Path path = integrate(m, starts[r], 15.0, dt, scheme);
            for (std::size_t i = 0; i < path.size(); i += 10) w.values(r, path.time(i), path.states[i].x, path.states[i].y);
        }
    }
    plot_phase(fs::path(o.common.out) / "stable_cycle.csv", fs::path(o.common.out) / "unstable_cycle.csv",
               fs::path(o.common.out) / "trajectories.csv", fixed_point_json(st.fixed_point),
               run.file("phase_portrait.svg"));
    run.settings()["targets"] = o.targets;
    std::cout << "fixed point c=" << fmt(z.x) << " w=" << fmt(z.y) << (st.fixed_point.stable ? " (stable)" : "")
              << "\nstable cycle period " << fmt(st.stable_cycle.period) << ", unstable cycle period "
              << fmt(st.unstable_cycle.period) << "\n";
    run.finish();
    return 0;
}

ShootDataset make_dataset(Run& run, const Options& o, const CarbonParams& p, const ShootConfig& cfg,
                          CarbonStructure& st)
{
    const CarbonModel m(p);
    st = carbon_structure(m, cfg.n_targets);
    write_cycle_csv(run.file("stable_cycle.csv"), st.stable_cycle);
    return generate_dataset(m, st.fixed_point.location, o.horizon, p.nu, st.stable_cycle.points, cfg,
                            derive_seed(o.common.seed, 0));
}

void emit_dataset(Run& run, const Options& o, const ShootDataset& ds)
{
    write_dataset_csv(run.file("dataset.csv"), ds);
    write_json(run.file("dataset.json"), dataset_meta_json(ds));
    const CsvTable d = read_csv(fs::path(o.common.out) / "dataset.csv");
    const CsvTable c = read_csv(fs::path(o.common.out) / "stable_cycle.csv");
    SvgPlot plot("Retained endpoints", "c (umol/kg)", "w (umol/kg)");
    plot.points(column(d, "end_c"), column(d, "end_w"), "#d62728", "endpoints", 1.5);
    plot.line(column(c, "c"), column(c, "w"), "#1f77b4", "stable cycle");
    plot.write(run.file("dataset.svg"));
    std::cout << "retained " << ds.records.size() << " of " << ds.drawn << " shots\n";
}

int cmd_gendata(const Options& o, int argc, char** argv)
{
    Run run("gendata", o, argc, argv);
    const CarbonParams p = run.params();
    const ShootConfig cfg = shoot_config(o);
    run.settings()["shooting"] = shoot_json(cfg);
    run.settings()["T"] = o.horizon;
    CarbonStructure st;
    const ShootDataset ds = make_dataset(run, o, p, cfg, st);
    emit_dataset(run, o, ds);
    run.finish();
    return 0;
}

ShootModel train_and_emit(Run& run, const Options& o, const ShootDataset& ds, const ShootConfig& cfg)
{
    ShootModel sm = train_shoot_net(ds, derive_seed(o.common.seed, 1), cfg.epochs, cfg.learning_rate);
    write_json(run.file("model.json"), model_to_json(sm.net));
    {
        CsvWriter w(run.file("training.csv"), {"epoch", "train_loss"});
        for (std::size_t e = 0; e < sm.report.history.size(); ++e) w.values(e, sm.report.history[e]);
    }
    write_json(run.file("train_report.json"),
               Json{{"epochs", sm.report.epochs},
                    {"train_loss", sm.report.train_loss},
                    {"validation_loss", sm.report.validation_loss},
                    {"metric", "normalized MSE on a held-out 20% split"},
                    {"warning", sm.warning}});
    if (sm.warning) {
        std::cerr << "warning: validation normalized MSE " << fmt(sm.report.validation_loss) << " exceeds "
                  << kGeneralizationTarget << "\n";
    }
    return sm;
}

int cmd_train(const Options& o, int argc, char** argv)
{
    Run run("train", o, argc, argv);
    if (o.data.empty()) throw ConfigError("train: --data DIR is required (output of gendata)");
    const ShootConfig cfg = shoot_config(o);
    const ShootDataset ds = read_dataset(fs::path(o.data) / "dataset.csv", read_json(fs::path(o.data) / "dataset.json"));
    run.settings()["data"] = o.data;
    run.settings()["epochs"] = cfg.epochs;
    const ShootModel sm = train_and_emit(run, o, ds, cfg);
    std::cout << "validation normalized MSE " << fmt(sm.report.validation_loss) << "\n";
    run.finish();
    return 0;
}

int cmd_path(const Options& o, int argc, char** argv)
{
    Run run("path", o, argc, argv);
    const CarbonParams p = run.params();
    const ShootConfig cfg = shoot_config(o);
    run.settings()["shooting"] = shoot_json(cfg);
    run.settings()["T"] = o.horizon;
    const CarbonModel m(p);

    CarbonStructure st;
    Mlp net;
    if (!o.model.empty()) {
        net = model_from_json(read_json(o.model));
        st = carbon_structure(m, cfg.n_targets);
        write_cycle_csv(run.file("stable_cycle.csv"), st.stable_cycle);
        run.settings()["model"] = o.model;
    } else {
        const ShootDataset ds = make_dataset(run, o, p, cfg, st);
        emit_dataset(run, o, ds);
        net = train_and_emit(run, o, ds, cfg).net;
    }
    const SelectionResult sel =
        most_probable_path(m, st.fixed_point.location, st.stable_cycle.points, net, o.horizon, cfg);
    write_targets_csv(run.file("targets.csv"), sel.table);
    write_path_csv(run.file("winner_path.csv"), sel.winner.path);
    const State e = sel.winner.path.back();
    write_json(run.file("path.json"), Json{{"target_index", sel.winner.target_index},
                                           {"action", sel.winner.action},
                                           {"endpoint_c", e.x},
                                           {"endpoint_w", e.y},
                                           {"reachable_count", sel.reachable_count}});
    plot_paths(fs::path(o.common.out) / "stable_cycle.csv", {{fs::path(o.common.out) / "winner_path.csv", "most probable path"}},
               "Most probable path", run.file("path.svg"));
    std::cout << "target " << sel.winner.target_index << " action " << fmt(sel.winner.action) << " endpoint c="
              << fmt(e.x) << " w=" << fmt(e.y) << " (" << sel.reachable_count << " reachable)\n";
    run.finish();
    return 0;
}

int cmd_sweep(const Options& o, int argc, char** argv)
{
    Run run("sweep", o, argc, argv);
    const CarbonParams p = run.params();
    const ShootConfig cfg = shoot_config(o);
    const SweepAxis axis = o.axis == "nu" ? SweepAxis::Nu : SweepAxis::Time;
    const auto values = parse_range(o.values);
    run.settings()["shooting"] = shoot_json(cfg);
    run.settings()["axis"] = o.axis;
    run.settings()["values"] = values;
    run.settings()["T"] = o.horizon;
    const auto rows = sweep(p, axis, values, o.horizon, cfg, o.common.seed);
    {
        CsvWriter w(run.file("sweep.csv"), {"axis", "endpoint_c", "endpoint_w", "action", "target_index", "reachable_count"});
        for (const auto& r : rows) w.values(r.axis, r.endpoint.x, r.endpoint.y, r.action, r.target_index, r.reachable_count);
    }
    Json errors = Json::array();
    for (const auto& r : rows) {
        if (!r.error.empty()) errors.push_back(Json{{"axis", r.axis}, {"error", r.error}});
        if (!r.error.empty()) std::cerr << o.axis << "=" << fmt(r.axis) << ": " << r.error << "\n";
    }
    write_json(run.file("sweep_failures.json"), errors);
    const CsvTable t = read_csv(fs::path(o.common.out) / "sweep.csv");
    const std::string xl = axis == SweepAxis::Nu ? "nu" : "T (10^4 yr)";
    SvgPlot(std::string("Winning endpoint c vs ") + o.axis, xl, "c (umol/kg)")
        .line(column(t, "axis"), column(t, "endpoint_c"), "#1f77b4")
        .points(column(t, "axis"), column(t, "endpoint_c"), "#1f77b4", {}, 3.0)
        .write(run.file("sweep_endpoint.svg"));
    SvgPlot(std::string("Action vs ") + o.axis, xl, "action")
        .line(column(t, "axis"), column(t, "action"), "#d62728")
        .points(column(t, "axis"), column(t, "action"), "#d62728", {}, 3.0)
        .write(run.file("sweep_action.svg"));
    run.finish();
    std::size_t failed = errors.size();
    std::cout << rows.size() - failed << " of " << rows.size() << " sweep points succeeded\n";
    return 0;
}

State pinn_target(Run& run, const Options& o, const CarbonModel& m, const CarbonStructure& st)
{
    if (!o.target.empty()) {
        const auto comma = o.target.find(',');
        if (comma == std::string::npos) throw ConfigError("--target expects C,W");
        return {std::stod(o.target.substr(0, comma)), std::stod(o.target.substr(comma + 1))};
    }
    const std::size_t k = o.target_index ? *o.target_index : steepest_index(m, st.stable_cycle);
    if (k >= st.stable_cycle.points.size()) throw ConfigError("--target-index out of range");
    run.settings()["target_index"] = k;
    return st.stable_cycle.points[k];
}

PinnConfig pinn_config(const Options& o, const State& x0, const State& xT)
{
    PinnConfig c;
    c.x0 = x0;
    c.xT = xT;
    c.horizon = o.horizon;
    if (o.epochs > 0) c.epochs = o.epochs;
    c.validate();
    return c;
}

Json pinn_json(const PinnResult& r)
{
    return Json{{"T", r.horizon},
                {"action", r.action},
                {"residual_loss", r.residual_loss},
                {"boundary_loss", r.boundary_loss},
                {"converged", r.converged},
                {"epochs", r.epochs},
                {"note", r.note}};
}

int cmd_pinn_path(const Options& o, int argc, char** argv)
{
    Run run("pinn-path", o, argc, argv);
    const CarbonParams p = run.params();
    const CarbonModel m(p);
    const CarbonStructure st = carbon_structure(m, o.targets);
    write_cycle_csv(run.file("stable_cycle.csv"), st.stable_cycle);
    const State target = pinn_target(run, o, m, st);
    const PinnConfig cfg = pinn_config(o, st.fixed_point.location, target);
    run.settings()["pinn"] = Json{{"lambda", cfg.lambda}, {"m", cfg.m}, {"layers", cfg.layers}, {"lr", cfg.lr},
                                  {"epochs", cfg.epochs}, {"T", cfg.horizon}, {"target", {target.x, target.y}}};
    const PinnResult r = solve_path_pinn(m, cfg, o.common.seed);
    write_path_csv(run.file("pinn_path.csv"), r.path);
    write_json(run.file("pinn_result.json"), pinn_json(r));
    plot_paths(fs::path(o.common.out) / "stable_cycle.csv", {{fs::path(o.common.out) / "pinn_path.csv", "PINN path"}},
               "PINN path", run.file("pinn_path.svg"));
    std::cout << "action " << fmt(r.action) << " residual " << fmt(r.residual_loss) << " boundary "
              << fmt(r.boundary_loss) << (r.converged ? " (converged)" : " (not converged: " + r.note + ")") << "\n";
    run.finish();
    return 0;
}

int cmd_pinn_time(const Options& o, int argc, char** argv)
{
    Run run("pinn-time", o, argc, argv);
    const CarbonParams p = run.params();
    const CarbonModel m(p);
    const CarbonStructure st = carbon_structure(m, o.targets);
    const State target = pinn_target(run, o, m, st);
    const auto colon = o.t_range.find(':');
    if (colon == std::string::npos || colon != o.t_range.rfind(':')) throw ConfigError("--t-range expects A:B");
    const double a = parse_range(o.t_range.substr(0, colon)).front();
    const double b = parse_range(o.t_range.substr(colon + 1)).front();
    const auto grid = uniform_grid(a, b, o.t_count);
    const PinnConfig cfg = pinn_config(o, st.fixed_point.location, target);
    run.settings()["t_grid"] = Json{{"from", a}, {"to", b}, {"count", o.t_count}};
    run.settings()["target"] = {target.x, target.y};
    run.settings()["epochs"] = cfg.epochs;

    OptimalTime best;
    bool any = true;
    auto curve = action_time_curve(m, cfg, grid, o.common.seed, o.common.workers);
    try {
        best = pick_optimal_time(curve);
    } catch (const ConvergenceError&) {
        any = false;
        best.curve = std::move(curve);
    }
    {
        CsvWriter w(run.file("pinn_time.csv"), {"T", "action", "residual_loss", "boundary_loss", "converged"});
        for (const auto& r : best.curve) w.values(r.horizon, r.action, r.residual_loss, r.boundary_loss, r.converged);
    }
    Json rep{{"converged_points", std::count_if(best.curve.begin(), best.curve.end(), [](const auto& r) { return r.converged; })}};
    if (any) {
        rep["T_star"] = best.best_horizon;
        rep["action"] = best.best_action;
        write_path_csv(run.file("pinn_best_path.csv"), best.curve[best.best_index].path);
    }
    write_json(run.file("pinn_time.json"), rep);
    const CsvTable t = read_csv(fs::path(o.common.out) / "pinn_time.csv");
    SvgPlot("Action vs transition time", "T (10^4 yr)", "action")
        .line(column(t, "T"), column(t, "action"), "#1f77b4")
        .write(run.file("pinn_time.svg"));
    run.finish(any);
    if (!any) {
        std::cerr << "pinn-time: no horizon converged\n";
        return 2;
    }
    std::cout << "T* = " << fmt(best.best_horizon) << " action " << fmt(best.best_action) << "\n";
    return 0;
}

int cmd_simulate(const Options& o, int argc, char** argv)
{
    Run run("simulate", o, argc, argv);
    const CarbonParams p = run.params();
    const CarbonModel m(p);
    const CarbonStructure st = carbon_structure(m, 720);
    SimConfig sc;
    sc.dt = o.common.dt.value_or(1e-3);
    sc.horizon = o.horizon;
    sc.seed = o.common.seed;
    sc.noise_scale = o.noise_scale;
    sc.ensemble = o.runs;
    sc.validate();
    run.settings()["simulation"] = Json{{"dt", sc.dt}, {"T", sc.horizon}, {"noise_scale", sc.noise_scale}, {"runs", o.runs}};

    SimConfig first = sc;
    first.seed = derive_seed(sc.seed, 0);
    const SimResult sim = euler_maruyama(m, st.fixed_point.location, first);
    write_trajectory_csv(run.file("trajectory.csv"), sim.path);
    write_cycle_csv(run.file("stable_cycle.csv"), st.stable_cycle);
    write_cycle_csv(run.file("unstable_cycle.csv"), st.unstable_cycle);
    const EscapeSummary es = escape_fraction(m, st.fixed_point.location, st.unstable_cycle.points, o.runs, sc,
                                             o.common.workers);
    write_json(run.file("ensemble.json"), Json{{"n_runs", es.n_runs}, {"escapes", es.escapes}, {"fraction", es.fraction},
                                               {"T", sc.horizon}, {"noise_scale", sc.noise_scale}, {"seed", sc.seed}});
    {
        const CsvTable tr = read_csv(fs::path(o.common.out) / "trajectory.csv");
        const CsvTable s = read_csv(fs::path(o.common.out) / "stable_cycle.csv");
        const CsvTable u = read_csv(fs::path(o.common.out) / "unstable_cycle.csv");
        SvgPlot("Stochastic trajectory", "c (umol/kg)", "w (umol/kg)")
            .line(column(tr, "c"), column(tr, "w"), "#999999", "sample path")
            .line(column(s, "c"), column(s, "w"), "#1f77b4", "stable cycle")
            .line(column(u, "c"), column(u, "w"), "#e6a700", "unstable cycle", true)
            .write(run.file("trajectory.svg"));
    }
    std::cout << "escape fraction " << fmt(es.fraction) << " (" << es.escapes << " of " << es.n_runs << ")\n";
    run.finish();
    return 0;
}

int cmd_action(const Options& o, int argc, char** argv)
{
    Run run("action", o, argc, argv);
    if (o.path.empty()) throw ConfigError("action: --path FILE is required");
    const CarbonParams p = run.params();
    const CarbonModel m(p);
    const Path path = read_path_csv(o.path);
    const double s = action(path, m);
    write_json(run.file("action.json"), Json{{"path", o.path}, {"samples", path.size()}, {"T", path.t_end() - path.t0}, {"action", s}});
    std::cout << fmt(s) << "\n";
    run.finish();
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Most probable transition paths of the stochastic carbon cycle model"};
    app.require_subcommand(1, 1);
    Options o;

    auto* analyze = app.add_subcommand("analyze", "fixed point, limit cycles and phase portrait");
    add_common(analyze, o.common);
    analyze->add_option("--nu", o.nu, "CO2 injection rate");
    analyze->add_option("--targets", o.targets, "cycle samples")->check(CLI::Range(100, 1000000));

    auto shoot_opts = [&](CLI::App* c) {
        add_common(c, o.common);
        c->add_option("--nu", o.nu, "CO2 injection rate")->check(CLI::NonNegativeNumber);
        c->add_option("--horizon", o.horizon, "transition time T")->check(CLI::PositiveNumber);
        c->add_option("--targets", o.targets, "cycle samples (targets)")->check(CLI::Range(100, 1000000));
        c->add_option("--samples", o.samples, "velocity samples")->check(CLI::Range(100, 100000000));
        c->add_option("--margin", o.margin, "annulus margin around the cycle")->check(CLI::PositiveNumber);
        c->add_option("--pilot", o.pilot, "pilot samples per box rung")->check(CLI::PositiveNumber);
        c->add_option("--epochs", o.epochs, "training epochs");
    };
    auto* gendata = app.add_subcommand("gendata", "sample the endpoint-velocity dataset");
    shoot_opts(gendata);

    auto* train = app.add_subcommand("train", "fit the endpoint -> velocity network");
    add_common(train, o.common);
    train->add_option("--data", o.data, "directory written by gendata")->required();
    train->add_option("--epochs", o.epochs, "training epochs");

    auto* path = app.add_subcommand("path", "most probable path over the cycle targets");
    shoot_opts(path);
    path->add_option("--epsilon", o.epsilon, "reachability threshold")->check(CLI::PositiveNumber);
    path->add_flag("--refine", o.refine, "Newton refinement of predicted velocities");
    path->add_option("--model", o.model, "trained model JSON (default: generate and train)");

    auto* sweep_cmd = app.add_subcommand("sweep", "re-run the pipeline along nu or T");
    shoot_opts(sweep_cmd);
    sweep_cmd->add_option("--epsilon", o.epsilon, "reachability threshold")->check(CLI::PositiveNumber);
    sweep_cmd->add_flag("--refine", o.refine, "Newton refinement of predicted velocities");
    sweep_cmd->add_option("--axis", o.axis, "nu or time")->check(CLI::IsMember({"nu", "time"}));
    sweep_cmd->add_option("--values", o.values, "A:B:STEP");

    auto pinn_opts = [&](CLI::App* c) {
        add_common(c, o.common);
        c->add_option("--nu", o.nu, "CO2 injection rate")->check(CLI::NonNegativeNumber);
        c->add_option("--targets", o.targets, "cycle samples")->check(CLI::Range(100, 1000000));
        c->add_option("--target-index", o.target_index, "cycle index of the target (default: steepest c)");
        c->add_option("--target", o.target, "explicit target state C,W");
        c->add_option("--epochs", o.epochs, "epoch budget per solve");
    };
    auto* pinn_path = app.add_subcommand("pinn-path", "collocation solve at one horizon");
    pinn_opts(pinn_path);
    pinn_path->add_option("--horizon", o.horizon, "transition time T")->check(CLI::PositiveNumber);

    auto* pinn_time = app.add_subcommand("pinn-time", "action over a grid of horizons");
    pinn_opts(pinn_time);
    pinn_time->add_option("--t-range", o.t_range, "A:B");
    pinn_time->add_option("--t-count", o.t_count, "grid points")->check(CLI::PositiveNumber);

    auto* simulate = app.add_subcommand("simulate", "Euler-Maruyama ensemble from the fixed point");
    add_common(simulate, o.common);
    simulate->add_option("--nu", o.nu, "CO2 injection rate")->check(CLI::NonNegativeNumber);
    simulate->add_option("--horizon", o.horizon, "simulated time")->check(CLI::PositiveNumber);
    simulate->add_option("--noise-scale", o.noise_scale, "diffusion multiplier")->check(CLI::NonNegativeNumber);
    simulate->add_option("--runs", o.runs, "ensemble size")->check(CLI::PositiveNumber);

    auto* action_cmd = app.add_subcommand("action", "action of a path CSV");
    add_common(action_cmd, o.common);
    action_cmd->add_option("--nu", o.nu, "CO2 injection rate")->check(CLI::NonNegativeNumber);
    action_cmd->add_option("--path", o.path, "CSV with t,c,w columns")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e, std::cerr, std::cerr);
        std::cerr << app.help();
        return 1;
    }

    try {
        if (*analyze) return cmd_analyze(o, argc, argv);
        if (*gendata) return cmd_gendata(o, argc, argv);
        if (*train) return cmd_train(o, argc, argv);
        if (*path) return cmd_path(o, argc, argv);
        if (*sweep_cmd) return cmd_sweep(o, argc, argv);
        if (*pinn_path) return cmd_pinn_path(o, argc, argv);
        if (*pinn_time) return cmd_pinn_time(o, argc, argv);
        if (*simulate) return cmd_simulate(o, argc, argv);
        if (*action_cmd) return cmd_action(o, argc, argv);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
