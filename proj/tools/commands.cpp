#include "commands.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <numeric>
#include <sstream>

#include "refgov/csv.hpp"
#include "refgov/error.hpp"
#include "refgov/fuelcell.hpp"
#include "refgov/test_plants.hpp"

namespace rgctl {

using namespace refgov;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string slurp(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path or_default(const fs::path& given, const fs::path& out, const char* name) {
  return given.empty() ? out / name : given;
}

RunManifest base_manifest(const Context& ctx, const std::string& command) {
  RunManifest m;
  m.command = command;
  m.config_path = ctx.config_path.string();
  m.config_sha256 = ctx.config_sha256;
  m.seed = ctx.seed;
  m.plant = ctx.plant->name();
  return m;
}

void write_text(const fs::path& path, const std::string& text, RunManifest& m) {
  write_file_atomic(path, text);
  m.outputs.push_back(path.string());
}

void finish(RunManifest& m, const fs::path& out) {
  m.write(out / ("manifest_" + m.command + ".json"));
}

NominalSource load_source(const fs::path& path) {
  if (!fs::exists(path))
    throw ConfigError("weight file " + path.string() + " not found (run `rgctl train` first)");
  return network_source(std::make_shared<const MlpNetwork>(load_network(path)));
}

bool needs_network(const std::string& kind) { return kind == "nnrg" || kind == "mnnrg"; }

std::string str_join(const std::vector<double>& v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + format_double(v[i]);
  return s;
}

}  // namespace

// ---------------------------------------------------------------- setup

std::unique_ptr<Plant> make_plant(const Config& cfg) {
  const std::string kind = cfg.string("plant");
  if (kind == "toy") return std::make_unique<ToyTanhPlant>();
  if (kind == "linear") return std::make_unique<LinearPlant>(make_linear_test_plant());
  if (kind == "overshoot") return std::make_unique<OvershootPlant>();
  if (kind == "fuelcell") {
    const fc::Params p = cfg.has("fc_params") ? fc::load_params(cfg.string("fc_params"))
                                              : fc::default_params();
    return std::make_unique<fc::FcPlant>(p);
  }
  throw ConfigError("unknown plant '" + kind + "' (toy, linear, overshoot, fuelcell)");
}

GovernorConfig governor_config(const Config& cfg, const Plant& plant) {
  GovernorConfig g;
  g.adm.j_star = cfg.integer("governor.j_star", 500);
  g.adm.epsilon = cfg.number("governor.epsilon", 0.05);
  g.adm.ss_tol = cfg.number("governor.ss_tol", 1e-9);
  g.L = cfg.integer("governor.L", 15);
  const std::string solver = cfg.string("governor.solver", "explicit");
  if (solver == "explicit")
    g.solver = SolverMode::explicit_roots;
  else if (solver == "bisection")
    g.solver = SolverMode::bisection;
  else
    throw ConfigError("governor.solver must be 'explicit' or 'bisection'");
  const std::string steady = cfg.string("governor.steady", "simulate");
  if (steady == "interval") {
    g.steady = SteadyStateMode::precomputed_interval;
    if (cfg.has("governor.interval")) {
      const auto iv = cfg.numbers("governor.interval");
      if (iv.size() != 2 || !(iv[0] <= iv[1]))
        throw ConfigError("governor.interval must be [lo, hi]");
      g.admissible_interval = InputInterval{iv[0], iv[1]};
    } else {
      g.admissible_interval = admissible_input_interval(plant, g.adm);
    }
  } else if (steady != "simulate") {
    throw ConfigError("governor.steady must be 'simulate' or 'interval'");
  }
  try {
    g.validate();
  } catch (const ContractViolation& e) {
    throw ConfigError(std::string("governor: ") + e.what());
  }
  return g;
}

Profile make_profile(const Config& cfg, const std::string& name, std::uint64_t default_seed) {
  const std::string p = "profiles." + name;
  if (!cfg.has(p + ".kind")) throw ConfigError("profile '" + name + "' is not defined");
  const std::string kind = cfg.string(p + ".kind");
  const double dt = cfg.number(p + ".dt", 0.01);
  if (kind == "step" || kind == "ramp") {
    const double duration = cfg.number(p + ".duration");
    const auto times = cfg.numbers(p + ".times"), levels = cfg.numbers(p + ".levels");
    return kind == "step" ? step_profile(name, dt, duration, times, levels)
                          : ramp_profile(name, dt, duration, times, levels);
  }
  if (kind == "random") {
    const auto seed = static_cast<std::uint64_t>(
        cfg.number(p + ".seed", static_cast<double>(default_seed)));
    return random_step_profile(name, dt, cfg.integer(p + ".samples", 1000), cfg.number(p + ".lo"),
                               cfg.number(p + ".hi"), cfg.number(p + ".hold_min"),
                               cfg.number(p + ".hold_max"), seed);
  }
  throw ConfigError("profile '" + name + "': kind must be step, ramp, or random");
}

int output_index(const Plant& plant, const std::string& name) {
  for (int i = 0; i < plant.output_dim(); ++i)
    if (plant.output_name(i) == name) return i;
  throw ConfigError("plant " + plant.name() + " has no output '" + name + "'");
}

std::vector<bool> governed_mask(const Config& cfg, const Plant& plant) {
  std::vector<bool> mask(plant.output_dim(), true);
  if (cfg.has("governor.governed")) {
    std::fill(mask.begin(), mask.end(), false);
    for (const auto& n : cfg.strings("governor.governed")) mask[output_index(plant, n)] = true;
  }
  return mask;
}

Context make_context(Config cfg, const fs::path& config_path, std::optional<std::uint64_t> seed) {
  Context ctx;
  ctx.config_sha256 = sha256_hex(cfg.source_text());
  ctx.config_path = config_path;
  ctx.seed = seed ? *seed : static_cast<std::uint64_t>(cfg.number("seed", 0.0));
  ctx.plant = make_plant(cfg);
  ctx.gov = governor_config(cfg, *ctx.plant);
  const auto b = ctx.plant->input_bounds();
  ctx.v0 = cfg.number("v0", std::clamp(0.0, b.lo, b.hi));
  if (!b.contains(ctx.v0)) throw ConfigError("v0 outside the plant input bounds");
  ctx.x0 = steady_state(*ctx.plant, ctx.v0, ctx.gov.adm).x;
  ctx.cfg = std::move(cfg);
  return ctx;
}

Context load_context(const Options& opt) {
  if (opt.config.empty()) throw ConfigError("--config is required");
  return make_context(Config::load(opt.config), opt.config, opt.seed);
}

// ---------------------------------------------------------------- bounds

void save_bound(const RemainderBound& b, const Plant& plant, const fs::path& path) {
  json j;
  j["kind"] = b.kind == RemainderBound::Kind::curvature ? "curvature" : "residual";
  j["values"] = b.values;
  std::vector<bool> governed = b.governed;
  if (governed.empty()) governed.assign(b.values.size(), true);
  j["governed"] = governed;
  std::vector<std::string> names;
  for (int i = 0; i < plant.output_dim(); ++i) names.push_back(plant.output_name(i));
  j["outputs"] = names;
  write_file_atomic(path, j.dump(2) + "\n");
}

RemainderBound load_bound(const fs::path& path, const Plant& plant) {
  if (!fs::exists(path))
    throw ConfigError("bound file " + path.string() + " not found (run `rgctl tune` first)");
  json j;
  try {
    j = json::parse(slurp(path));
  } catch (const json::exception& e) {
    throw CorruptFile("bound file " + path.string() + ": " + e.what());
  }
  try {
    const std::string kind = j.at("kind").get<std::string>();
    RemainderBound b = kind == "curvature" ? RemainderBound::curvature(j.at("values"))
                       : kind == "residual"
                           ? RemainderBound::residual(j.at("values"))
                           : throw SchemaError("bound kind must be curvature or residual");
    b.governed = j.at("governed").get<std::vector<bool>>();
    b.validate(plant.output_dim());
    return b;
  } catch (const json::exception& e) {
    throw SchemaError("bound file " + path.string() + ": " + e.what());
  } catch (const ContractViolation& e) {
    throw SchemaError("bound file " + path.string() + ": " + e.what());
  }
}

std::unique_ptr<Governor> make_governor(const std::string& kind, const Context& ctx,
                                        const NominalSource& source, const RemainderBound* bound,
                                        int L_override) {
  GovernorConfig g = ctx.gov;
  if (L_override > 0) g.L = L_override;
  if (kind == "none") return std::make_unique<NoGovernor>();
  if (kind == "prg") return std::make_unique<PrgGovernor>(*ctx.plant, g);
  if (needs_network(kind) && !source) throw ConfigError(kind + " needs a weight file");
  if (kind == "nnrg") return std::make_unique<NnRgGovernor>(source);
  if (kind == "mnnrg") {
    if (!bound) throw ConfigError("mnnrg needs a bound file");
    return std::make_unique<MnnRgGovernor>(*ctx.plant, source, *bound, g);
  }
  throw ConfigError("unknown governor '" + kind + "' (none, prg, nnrg, mnnrg)");
}

// ---------------------------------------------------------------- pipeline

CollectResult collect(const Context& ctx, const Profile& profile) {
  PrgGovernor prg(*ctx.plant, ctx.gov);
  CollectResult r;
  r.log = run_closed_loop(*ctx.plant, prg, profile, ctx.x0, ctx.v0);
  r.dataset = dataset_from_run(*ctx.plant, to_run_log(r.log, profile.dt));
  return r;
}

TrainOutcome train_trials(const Context& ctx, const Dataset& data) {
  const Config& c = ctx.cfg;
  if (data.rows() < 20) throw ConfigError("dataset has " + std::to_string(data.rows()) + " rows; need >= 20");
  std::vector<int> hidden;
  for (double w : c.numbers("train.hidden", {16, 16})) hidden.push_back(static_cast<int>(w));
  TrainParams p;
  p.learning_rate = c.number("train.learning_rate", p.learning_rate);
  p.max_epochs = c.integer("train.max_epochs", p.max_epochs);
  p.patience = c.integer("train.patience", p.patience);
  const int trials = c.integer("train.trials", 1);
  if (trials < 1) throw ConfigError("train.trials must be >= 1");

  TrainOutcome out;
  for (int k = 0; k < trials; ++k) {
    const std::uint64_t seed = ctx.seed + static_cast<std::uint64_t>(k);
    TrainResult r = train(data, hidden, seed, p);
    out.trials.push_back({k, seed, r.metrics});
    if (k == 0 || r.metrics.rmse_val < out.best.metrics.rmse_val) {
      out.best = std::move(r);
      out.selected = k;
    }
  }
  return out;
}

void check_tuning_profile(const Config& cfg, const std::string& tune_profile) {
  const std::string trained_on = cfg.string("collect.profile", "");
  if (!trained_on.empty() && trained_on == tune_profile)
    throw ConfigError("tuning profile '" + tune_profile +
                      "' is the profile the network was trained on; the remainder bound must be "
                      "calibrated on a reference profile distinct from the training data");
}

TuneOutcome tune(const Context& ctx, const Profile& profile, const NominalSource& source,
                 const RunLog* prg_log) {
  const Config& c = ctx.cfg;
  const Plant& plant = *ctx.plant;
  const int ny = plant.output_dim();
  const std::vector<bool> mask = governed_mask(c, plant);
  const std::string method = c.string("tune.method", "mbar");

  TuneOutcome out;
  if (method == "mbar") {
    std::vector<int> outputs;
    if (c.has("tune.outputs")) {
      for (const auto& n : c.strings("tune.outputs")) outputs.push_back(output_index(plant, n));
    } else {
      for (int i = 0; i < ny; ++i)
        if (mask[i]) outputs.push_back(i);
    }
    const auto delta = c.numbers("tune.delta");
    if (delta.size() != outputs.size())
      throw ConfigError("tune.delta needs one step per tuned output");
    std::vector<double> initial = c.numbers("tune.initial", std::vector<double>(ny, 0.0));
    if (static_cast<int>(initial.size()) != ny)
      throw ConfigError("tune.initial needs one value per plant output");
    TuningOptions opts;
    opts.max_sweeps = c.integer("tune.max_sweeps", opts.max_sweeps);
    opts.max_iterations = c.integer("tune.max_iterations", opts.max_iterations);
    opts.floor = c.numbers("tune.floor", {});
    const MbarExperiment exp =
        mnnrg_experiment(plant, plant, profile, source, ctx.gov, ctx.x0, ctx.v0, mask);
    out.mbar_run = calibrate_mbar(exp, outputs, delta, initial, opts);
    out.bound = RemainderBound::curvature(out.mbar_run->mbar);
  } else if (method == "rbar") {
    RunLog fresh;
    if (!prg_log) {
      fresh = to_run_log(collect(ctx, profile).log, profile.dt);
      prg_log = &fresh;
    }
    out.rbar = compute_rbar(*prg_log, source, plant, ctx.gov.adm.j_star);
    out.bound = RemainderBound::residual(out.rbar->rbar);
  } else {
    throw ConfigError("tune.method must be 'mbar' or 'rbar'");
  }
  out.bound.governed = mask;
  return out;
}

BenchRow bench_governor(const Context& ctx, const std::string& kind, const Profile& profile,
                        const NominalSource& source, const RemainderBound* bound, int repeats,
                        int L) {
  if (repeats < 1) throw ConfigError("bench repeats must be >= 1");
  std::vector<double> best(profile.size(), std::numeric_limits<double>::infinity());
  RunOptions ro;
  ro.time_steps = true;
  for (int k = 0; k < repeats; ++k) {
    auto gov = make_governor(kind, ctx, source, bound, L);
    const ClosedLoopLog log = run_closed_loop(*ctx.plant, *gov, profile, ctx.x0, ctx.v0, ro);
    for (int t = 0; t < profile.size(); ++t) best[t] = std::min(best[t], log.steps[t].seconds);
  }
  BenchRow row{kind, L > 0 ? L : ctx.gov.L, 0.0, 0.0};
  row.mean_ms = 1e3 * std::accumulate(best.begin(), best.end(), 0.0) / best.size();
  row.max_ms = 1e3 * *std::max_element(best.begin(), best.end());
  return row;
}

double slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ContractViolation("slope needs >= 2 points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

// ---------------------------------------------------------------- commands

int cmd_collect(const Options& opt) {
  const auto t0 = Clock::now();
  const Context ctx = load_context(opt);
  const std::string name =
      opt.profile.empty() ? ctx.cfg.string("collect.profile") : opt.profile;
  const Profile profile = make_profile(ctx.cfg, name, ctx.seed);
  fs::create_directories(opt.out);

  RunManifest m = base_manifest(ctx, "collect");
  m.governor = "prg";
  m.profile = profile.id;
  const auto t1 = Clock::now();
  const CollectResult r = collect(ctx, profile);
  m.wall_clock["prg_run"] = seconds_since(t1);

  std::ostringstream ds, log;
  write_dataset_csv(ds, r.dataset);
  write_run_log(log, *ctx.plant, r.log, profile.dt);
  write_text(opt.out / "dataset.csv", ds.str(), m);
  write_text(opt.out / "prg_run.csv", log.str(), m);
  m.notes["rows"] = std::to_string(r.dataset.rows());
  m.notes["violating_samples"] = std::to_string(r.log.violating_samples);
  m.wall_clock["total"] = seconds_since(t0);
  finish(m, opt.out);
  std::cout << "collected " << r.dataset.rows() << " rows on profile '" << profile.id << "'\n";
  return kOk;
}

int cmd_train(const Options& opt) {
  const auto t0 = Clock::now();
  const Context ctx = load_context(opt);
  const fs::path ds_path = or_default(opt.dataset, opt.out, "dataset.csv");
  if (!fs::exists(ds_path)) throw ConfigError("dataset " + ds_path.string() + " not found");
  const Dataset data = read_dataset_csv(ds_path);
  const int n = ctx.plant->state_dim();
  if (data.X.cols() != n + 2)
    throw SchemaError("dataset has " + std::to_string(data.X.cols()) + " features; plant " +
                      ctx.plant->name() + " needs " + std::to_string(n + 2));
  fs::create_directories(opt.out);

  RunManifest m = base_manifest(ctx, "train");
  m.profile = ctx.cfg.string("collect.profile", "");
  m.notes["dataset"] = ds_path.string();
  const TrainOutcome out = train_trials(ctx, data);

  std::ostringstream table;
  table << "trial,seed,rmse_train,rmse_val,rmse_test,rmse_pooled,epochs,best_epoch,selected\n";
  for (const auto& t : out.trials) {
    const auto& mt = t.metrics;
    table << t.trial << ',' << t.seed << ',' << format_double(mt.rmse_train) << ','
          << format_double(mt.rmse_val) << ',' << format_double(mt.rmse_test) << ','
          << format_double(mt.rmse_pooled) << ',' << mt.epochs << ',' << mt.best_epoch << ','
          << (t.trial == out.selected) << '\n';
  }
  const fs::path weights = or_default(opt.weights, opt.out, "weights.json");
  save_network(out.best.net, weights);
  m.outputs.push_back(weights.string());
  write_text(opt.out / "train_metrics.csv", table.str(), m);
  m.indices["train"] = out.best.split.train;
  m.indices["val"] = out.best.split.val;
  m.indices["test"] = out.best.split.test;
  m.notes["selected_trial"] = std::to_string(out.selected);
  m.wall_clock["total"] = seconds_since(t0);
  finish(m, opt.out);
  const auto& b = out.best.metrics;
  std::cout << "trial " << out.selected << " selected: rmse train " << b.rmse_train << ", val "
            << b.rmse_val << ", test " << b.rmse_test << "\n";
  return kOk;
}

int cmd_tune(const Options& opt) {
  const auto t0 = Clock::now();
  const Context ctx = load_context(opt);
  const std::string name = opt.profile.empty() ? ctx.cfg.string("tune.profile") : opt.profile;
  check_tuning_profile(ctx.cfg, name);
  const Profile profile = make_profile(ctx.cfg, name, ctx.seed);
  const NominalSource source = load_source(or_default(opt.weights, opt.out, "weights.json"));
  fs::create_directories(opt.out);

  RunManifest m = base_manifest(ctx, "tune");
  m.governor = "mnnrg";
  m.profile = profile.id;
  std::optional<RunLog> log;
  if (!opt.run_log.empty()) {
    log = read_run_log(opt.run_log, *ctx.plant);
    m.notes["run_log"] = opt.run_log.string();
  }
  const TuneOutcome out = tune(ctx, profile, source, log ? &*log : nullptr);

  const fs::path bound = or_default(opt.bound, opt.out, "bound.json");
  save_bound(out.bound, *ctx.plant, bound);
  m.outputs.push_back(bound.string());
  if (out.mbar_run) {
    std::ostringstream os;
    write_tuning_log(os, *out.mbar_run);
    write_text(opt.out / "tuning_log.csv", os.str(), m);
    m.notes["experiments"] = std::to_string(out.mbar_run->experiments);
    m.notes["converged"] = out.mbar_run->converged ? "true" : "false";
  } else {
    std::ostringstream os;
    os << "output,rbar,t_arg,j_arg\n";
    for (size_t i = 0; i < out.rbar->rbar.size(); ++i)
      os << ctx.plant->output_name(static_cast<int>(i)) << ',' << format_double(out.rbar->rbar[i])
         << ',' << out.rbar->t_arg[i] << ',' << out.rbar->j_arg[i] << '\n';
    write_text(opt.out / "rbar.csv", os.str(), m);
  }
  m.notes["values"] = str_join(out.bound.values);
  m.wall_clock["total"] = seconds_since(t0);
  finish(m, opt.out);
  std::cout << (out.mbar_run ? "mbar" : "rbar") << " = [" << str_join(out.bound.values) << "]\n";
  return kOk;
}

int cmd_simulate(const Options& opt) {
  const auto t0 = Clock::now();
  const Context ctx = load_context(opt);
  const std::string kind = opt.governor.empty() ? ctx.cfg.string("simulate.governor", "mnnrg")
                                                : opt.governor;
  const std::string name =
      opt.profile.empty() ? ctx.cfg.string("simulate.profile") : opt.profile;
  const Profile profile = make_profile(ctx.cfg, name, ctx.seed);
  NominalSource source;
  std::optional<RemainderBound> bound;
  if (needs_network(kind)) source = load_source(or_default(opt.weights, opt.out, "weights.json"));
  if (kind == "mnnrg") bound = load_bound(or_default(opt.bound, opt.out, "bound.json"), *ctx.plant);
  auto gov = make_governor(kind, ctx, source, bound ? &*bound : nullptr);
  RunOptions ro;
  ro.time_steps = true;
  if (ctx.cfg.has("noise.sigma")) {
    const auto s = ctx.cfg.numbers("noise.sigma");
    if (static_cast<int>(s.size()) != ctx.plant->state_dim())
      throw ConfigError("noise.sigma needs one entry per state");
    ro.noise_sigma.resize(s.size());
    for (size_t i = 0; i < s.size(); ++i) ro.noise_sigma(i) = s[i];
    ro.noise_seed = ctx.seed;
  }
  fs::create_directories(opt.out);

  RunManifest m = base_manifest(ctx, "simulate");
  m.governor = kind;
  m.profile = profile.id;
  const auto t1 = Clock::now();
  const ClosedLoopLog log = run_closed_loop(*ctx.plant, *gov, profile, ctx.x0, ctx.v0, ro);
  m.wall_clock["run"] = seconds_since(t1);

  const std::string stem = kind + "_" + profile.id;
  std::ostringstream run, diag, viol;
  write_run_log(run, *ctx.plant, log, profile.dt);
  write_run_diagnostics(diag, log);
  viol << "t,output,margin\n";
  for (const auto& s : log.steps)
    for (int i = 0; i < s.y.size(); ++i)
      if (s.y(i) > ro.violation_tol)
        viol << format_double(s.t) << ',' << ctx.plant->output_name(i) << ','
             << format_double(s.y(i)) << '\n';
  write_text(opt.out / ("run_" + stem + ".csv"), run.str(), m);
  write_text(opt.out / ("diag_" + stem + ".csv"), diag.str(), m);
  write_text(opt.out / ("violations_" + stem + ".csv"), viol.str(), m);
  if (const auto* fcp = dynamic_cast<const fc::FcPlant*>(ctx.plant.get())) {
    std::ostringstream os;
    fc::write_run_header(os);
    for (const auto& s : log.steps) fc::write_run_row(os, s.t, s.diag.r, s.diag.v, s.x, fcp->params());
    write_text(opt.out / ("fc_" + stem + ".csv"), os.str(), m);
  }

  std::cout << kind << " on '" << profile.id << "': " << log.violating_samples
            << " violating samples";
  for (int i = 0; i < ctx.plant->output_dim(); ++i)
    std::cout << (i ? ", " : " (") << ctx.plant->output_name(i) << ' ' << log.violations[i];
  std::cout << ")\n";
  m.notes["violating_samples"] = std::to_string(log.violating_samples);
  if (!opt.reference.empty()) {
    const RunLog ref = read_run_log(opt.reference, *ctx.plant);
    const double e = command_rmse(log.commands(), ref.v);
    m.notes["command_rmse"] = format_double(e);
    m.notes["reference"] = opt.reference.string();
    std::cout << "command RMSE vs " << opt.reference.string() << ": " << e << "\n";
  }
  m.wall_clock["total"] = seconds_since(t0);
  finish(m, opt.out);
  return opt.assert_feasible && log.any_violation() ? kViolation : kOk;
}

int cmd_compare(const Options& opt) {
  if (opt.compare.size() != 2) throw ConfigError("compare takes two run logs");
  const auto a = read_csv(opt.compare[0]).column_values("v");
  const auto b = read_csv(opt.compare[1]).column_values("v");
  const double e = command_rmse(a, b);
  std::cout << "command RMSE: " << format_double(e) << "\n";
  if (!opt.out.empty()) {
    fs::create_directories(opt.out);
    RunManifest m;
    m.command = "compare";
    m.notes["a"] = opt.compare[0].string();
    m.notes["b"] = opt.compare[1].string();
    m.notes["command_rmse"] = format_double(e);
    finish(m, opt.out);
  }
  return kOk;
}

int cmd_bench(const Options& opt) {
  const auto t0 = Clock::now();
  const Context ctx = load_context(opt);
  const Config& c = ctx.cfg;
  const std::string name = opt.profile.empty() ? c.string("bench.profile") : opt.profile;
  const Profile profile = make_profile(c, name, ctx.seed);
  const int repeats = c.integer("bench.repeats", 10);
  std::vector<std::string> kinds{"prg", "mnnrg"};
  if (c.has("bench.governors")) kinds = c.strings("bench.governors");
  const bool nn = std::any_of(kinds.begin(), kinds.end(), needs_network);
  const NominalSource source =
      nn ? load_source(or_default(opt.weights, opt.out, "weights.json")) : NominalSource{};
  std::optional<RemainderBound> bound;
  if (std::find(kinds.begin(), kinds.end(), "mnnrg") != kinds.end())
    bound = load_bound(or_default(opt.bound, opt.out, "bound.json"), *ctx.plant);
  const RemainderBound* bp = bound ? &*bound : nullptr;
  fs::create_directories(opt.out);

  RunManifest m = base_manifest(ctx, "bench");
  m.profile = profile.id;
  std::ostringstream table;
  table << "governor,L,mean_ms,max_ms\n";
  for (const auto& k : kinds) {
    const BenchRow r = bench_governor(ctx, k, profile, source, bp, repeats, 0);
    table << r.governor << ',' << r.L << ',' << format_double(r.mean_ms) << ','
          << format_double(r.max_ms) << '\n';
    std::cout << k << ": mean " << r.mean_ms << " ms, max " << r.max_ms << " ms\n";
  }
  write_text(opt.out / "bench_table.csv", table.str(), m);

  const auto Ls = c.numbers("bench.L_sweep", {});
  if (!Ls.empty()) {
    const int sweep_repeats = c.integer("bench.sweep_repeats", std::min(repeats, 3));
    std::vector<double> xs, prg, mnn;
    std::ostringstream sweep;
    sweep << "L,prg_mean_ms,mnnrg_mean_ms\n";
    for (double Lf : Ls) {
      const int L = static_cast<int>(Lf);
      xs.push_back(L);
      prg.push_back(bench_governor(ctx, "prg", profile, source, bp, sweep_repeats, L).mean_ms);
      mnn.push_back(bp ? bench_governor(ctx, "mnnrg", profile, source, bp, sweep_repeats, L).mean_ms
                       : std::nan(""));
      sweep << L << ',' << format_double(prg.back()) << ',' << format_double(mnn.back()) << '\n';
    }
    write_text(opt.out / "bench_lsweep.csv", sweep.str(), m);
    if (xs.size() >= 2) {
      m.notes["prg_slope_ms_per_L"] = format_double(slope(xs, prg));
      if (bp) m.notes["mnnrg_slope_ms_per_L"] = format_double(slope(xs, mnn));
    }
  }
  m.wall_clock["total"] = seconds_since(t0);
  finish(m, opt.out);
  return kOk;
}

// ---------------------------------------------------------------- entry

int run(int argc, char** argv) {
  CLI::App app{"Reference governor toolkit: collect, train, tune, simulate, bench, compare"};
  app.require_subcommand(1);
  Options opt;
  std::uint64_t seed = 0;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config, "TOML run configuration")->required();
    sub->add_option("--seed", seed, "Override the configured seed");
    sub->add_option("--out", opt.out, "Output directory");
    sub->add_option("--profile", opt.profile, "Override the command's profile");
    sub->add_option("--weights", opt.weights, "Network weight file");
    sub->add_option("--bound", opt.bound, "Remainder bound file");
  };
  auto* collect_cmd = app.add_subcommand("collect", "PRG closed loop -> training dataset");
  common(collect_cmd);
  auto* train_cmd = app.add_subcommand("train", "Train networks and keep the best");
  common(train_cmd);
  train_cmd->add_option("--dataset", opt.dataset, "Dataset CSV");
  auto* tune_cmd = app.add_subcommand("tune", "Calibrate M-bar or R-bar");
  common(tune_cmd);
  tune_cmd->add_option("--run-log", opt.run_log, "PRG run log for R-bar");
  auto* sim_cmd = app.add_subcommand("simulate", "Closed-loop run with violation report");
  common(sim_cmd);
  sim_cmd->add_option("--governor", opt.governor, "none | prg | nnrg | mnnrg");
  sim_cmd->add_flag("--assert-feasible", opt.assert_feasible, "Exit 3 on any violation");
  sim_cmd->add_option("--reference", opt.reference, "Run log to compare commands against");
  auto* bench_cmd = app.add_subcommand("bench", "Per-step timing and L sweep");
  common(bench_cmd);
  auto* cmp_cmd = app.add_subcommand("compare", "Command RMSE between two run logs");
  cmp_cmd->add_option("logs", opt.compare, "Two run logs")->expected(2)->required();
  cmp_cmd->add_option("--out", opt.out, "Output directory for the manifest");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }
  for (auto* sub : {collect_cmd, train_cmd, tune_cmd, sim_cmd, bench_cmd})
    if (sub->parsed() && sub->count("--seed")) opt.seed = seed;

  try {
    if (collect_cmd->parsed()) return cmd_collect(opt);
    if (train_cmd->parsed()) return cmd_train(opt);
    if (tune_cmd->parsed()) return cmd_tune(opt);
    if (sim_cmd->parsed()) return cmd_simulate(opt);
    if (bench_cmd->parsed()) return cmd_bench(opt);
    if (cmp_cmd->parsed()) return cmd_compare(opt);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const SchemaError& e) {
    std::cerr << "schema error: " << e.what() << "\n";
    return kConfigError;
  } catch (const CorruptFile& e) {
    std::cerr << "corrupt file: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kConfigError;
}

}  // namespace rgctl
