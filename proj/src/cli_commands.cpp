#include "exitbsde/cli_commands.hpp"

#include "exitbsde/errors.hpp"
#include "exitbsde/mc.hpp"
#include "exitbsde/sampling.hpp"
#include "exitbsde/verify.hpp"

#include <filesystem>
#include <iostream>
#include <sstream>

namespace exitbsde {

namespace {

struct Resolved {
  ProblemPtr problem;
  CandidatePtr candidate;
  PathWeight weight;
  double h = 0.0;
  std::vector<double> h_list;
  long long n_paths = 1000;
  std::uint64_t seed = 0;
  Vec x0;
  bool x0_uniform = false;
  int refine_factor = 64;
  long max_steps = 0;
  std::string outdir = "out";
  bool per_path = false;
  bool debug_increments = false;
  json echo;  // resolved-config document written next to the results
};

Vec default_x0(const ProblemSpec& p) {
  if (p.domain.kind() == Domain::Kind::Interval) {
    Vec x(1);
    x[0] = 0.5 * (p.domain.lo() + p.domain.hi());
    return x;
  }
  return p.domain.center();
}

Resolved resolve(const json& config, const std::string& outdir,
                 const std::vector<std::string>& sections, bool needs_candidate) {
  std::vector<std::string> allowed = sections;
  allowed.push_back("version");
  require_keys(config, allowed, "top-level");
  for (const auto& s : sections)
    if (s != "candidate" && s != "weight" && s != "refine" && s != "output" &&
        s != "study" && s != "wald" && s != "train" && s != "validation" &&
        s != "plateau" && s != "decompose" && !config.contains(s))
      throw ConfigError("config: missing required section '" + s + "'");

  Resolved r;
  r.echo["version"] = 1;
  if (config.contains("problem")) {
    r.problem = problem_from_json(config.at("problem"));
    if (config.at("problem").contains("manufactured")) {
      r.echo["problem"] = config.at("problem");
    } else {
      r.echo["problem"] = {{"name", r.problem->name}, {"dimension", r.problem->dim}};
    }
  }
  if (needs_candidate) {
    if (!config.contains("candidate"))
      throw ConfigError("config: missing required section 'candidate'");
    r.candidate = candidate_from_config(config.at("candidate"), r.problem);
    r.echo["candidate"] = config.at("candidate");
  }
  r.weight = config.contains("weight") ? weight_from_json(config.at("weight"))
                                       : PathWeight::unit();
  r.echo["weight"] = weight_to_json(r.weight);

  if (config.contains("grid")) {
    const json& grid = config.at("grid");
    require_keys(grid, {"h", "h_list"}, "grid");
    if (grid.contains("h")) r.h = grid.at("h").get<double>();
    if (grid.contains("h_list"))
      for (const auto& v : grid.at("h_list")) r.h_list.push_back(v.get<double>());
    r.echo["grid"] = grid;
  }

  if (config.contains("sampling")) {
    const json& s = config.at("sampling");
    require_keys(s, {"n_paths", "seed", "x0", "x0_distribution"}, "sampling");
    if (s.contains("n_paths")) r.n_paths = s.at("n_paths").get<long long>();
    if (s.contains("seed")) r.seed = s.at("seed").get<std::uint64_t>();
    if (s.contains("x0_distribution")) {
      if (s.at("x0_distribution") != "uniform")
        throw ConfigError("sampling.x0_distribution: only \"uniform\" is supported");
      r.x0_uniform = true;
    }
    if (s.contains("x0")) {
      const auto& a = s.at("x0");
      r.x0.resize(static_cast<int>(a.size()));
      for (std::size_t i = 0; i < a.size(); ++i) r.x0[static_cast<int>(i)] = a[i].get<double>();
    }
  }
  if (r.problem && !r.x0_uniform) {
    if (r.x0.size() == 0) r.x0 = default_x0(*r.problem);
    if (static_cast<int>(r.x0.size()) != r.problem->dim)
      throw ConfigError("sampling.x0: dimension mismatch with the problem");
    if (!r.problem->domain.contains(r.x0))
      throw ConfigError("sampling.x0: starting point is not in the open domain");
  }
  {
    json s;
    s["n_paths"] = r.n_paths;
    s["seed"] = r.seed;
    if (r.x0_uniform) {
      s["x0_distribution"] = "uniform";
    } else {
      json x = json::array();
      for (int i = 0; i < r.x0.size(); ++i) x.push_back(r.x0[i]);
      s["x0"] = x;
    }
    r.echo["sampling"] = s;
  }

  if (config.contains("refine")) {
    const json& rf = config.at("refine");
    require_keys(rf, {"factor", "max_steps"}, "refine");
    if (rf.contains("factor")) r.refine_factor = rf.at("factor").get<int>();
    if (rf.contains("max_steps")) r.max_steps = rf.at("max_steps").get<long>();
  }
  r.echo["refine"] = {{"factor", r.refine_factor}, {"max_steps", r.max_steps}};

  r.outdir = outdir;
  if (config.contains("output")) {
    const json& o = config.at("output");
    require_keys(o, {"directory", "formats", "per_path", "debug_increments"}, "output");
    if (outdir.empty() && o.contains("directory"))
      r.outdir = o.at("directory").get<std::string>();
    if (o.contains("per_path")) r.per_path = o.at("per_path").get<bool>();
    if (o.contains("debug_increments"))
      r.debug_increments = o.at("debug_increments").get<bool>();
  }
  if (r.outdir.empty()) r.outdir = "out";
  // The destination directory is an execution detail (like the worker count):
  // keeping it out of the echo keeps reruns byte-identical wherever they land.
  r.echo["output"] = {{"per_path", r.per_path}, {"debug_increments", r.debug_increments}};
  return r;
}

std::string join_path(const std::string& dir, const std::string& file) {
  return (std::filesystem::path(dir) / file).string();
}

void write_echo(const Resolved& r) {
  write_file(join_path(r.outdir, "resolved_config.json"), r.echo.dump(2) + "\n");
}

}  // namespace

// ---------------------------------------------------------------------------

int cmd_simulate(const json& config, const std::string& outdir, int threads) {
  Resolved r = resolve(config, outdir, {"problem", "grid", "sampling", "output"}, false);
  if (!(r.h > 0.0)) throw ConfigError("grid.h: required and must be positive");
  const std::uint64_t sim_key = derive_seed(r.seed, "simulate");
  const std::uint64_t x0_key = derive_seed(r.seed, "x0");
  const long max_steps = r.max_steps > 0 ? r.max_steps : default_max_steps(r.h);

  struct Acc {
    std::ostringstream csv;
    std::ostringstream inc_csv;
    long long censored = 0;
  };
  const ProblemSpec& p = *r.problem;
  const bool debug = r.debug_increments;
  auto work = [&](Acc& acc, long long id) {
    Vec x0 = r.x0;
    if (r.x0_uniform) {
      RngStream xs(x0_key, static_cast<std::uint64_t>(id));
      x0 = uniform_in_domain(p.domain, [&xs] { return xs.next_uniform(); });
    }
    const GridPath path =
        simulate_path(p, x0, r.h, RngStream(sim_key, static_cast<std::uint64_t>(id)),
                      max_steps);
    if (!path.exited) ++acc.censored;
    acc.csv << id << ',' << path.exit_index << ',' << format_double(path.tau_bar()) << ','
            << (path.exited ? 0 : 1);
    const Vec& xe = path.states.back();
    for (int i = 0; i < p.dim; ++i) acc.csv << ',' << format_double(xe[i]);
    acc.csv << '\n';
    if (debug) {
      for (long k = 0; k < path.steps(); ++k) {
        acc.inc_csv << id << ',' << k;
        for (int i = 0; i < p.dim; ++i)
          acc.inc_csv << ',' << format_double(path.increments[static_cast<std::size_t>(k)][i]);
        acc.inc_csv << '\n';
      }
    }
  };
  auto merge = [](Acc& into, const Acc& from) {
    into.csv << from.csv.str();
    into.inc_csv << from.inc_csv.str();
    into.censored += from.censored;
  };
  Acc total = run_chunked<Acc>(r.n_paths, threads, work, merge);

  std::ostringstream head;
  head << "path_id,exit_index,tau_bar,censored";
  for (int i = 0; i < p.dim; ++i) head << ",exit_x" << i;
  head << '\n';
  write_file(join_path(r.outdir, "paths.csv"), head.str() + total.csv.str());
  if (debug) {
    std::ostringstream ih;
    ih << "path_id,step";
    for (int i = 0; i < p.dim; ++i) ih << ",dw" << i;
    ih << '\n';
    write_file(join_path(r.outdir, "increments.csv"), ih.str() + total.inc_csv.str());
  }
  json summary;
  summary["n_paths"] = r.n_paths;
  summary["n_censored"] = total.censored;
  summary["h"] = r.h;
  write_file(join_path(r.outdir, "summary.json"), summary.dump(2) + "\n");
  write_echo(r);
  return kExitOk;
}

int cmd_loss_eval(const json& config, const std::string& outdir, int threads) {
  Resolved r = resolve(config, outdir,
                       {"problem", "candidate", "weight", "grid", "sampling", "output"}, true);
  if (!(r.h > 0.0)) throw ConfigError("grid.h: required and must be positive");
  EstimateOptions eo;
  eo.n_paths = r.n_paths;
  eo.seed = r.seed;
  eo.x0 = r.x0;
  eo.x0_uniform = r.x0_uniform;
  eo.h = r.h;
  eo.max_steps = r.max_steps;
  eo.threads = threads;
  std::vector<PerPathRecord> dump;
  if (r.per_path) eo.dump = &dump;
  const LossReport rep = estimate_weighted_loss(*r.candidate, *r.problem, r.weight, eo);
  json doc = loss_report_to_json(rep);
  doc["h"] = r.h;
  doc["weight"] = weight_to_json(r.weight);
  write_file(join_path(r.outdir, "loss_report.json"), doc.dump(2) + "\n");
  if (r.per_path) write_file(join_path(r.outdir, "per_path.csv"), per_path_to_csv(dump));
  write_echo(r);
  return kExitOk;
}

int cmd_rate_study(const json& config, const std::string& outdir, int threads) {
  Resolved r = resolve(
      config, outdir,
      {"problem", "candidate", "weight", "grid", "sampling", "refine", "study", "output"},
      true);
  if (r.h_list.size() < 3) throw ConfigError("grid.h_list: required with >= 3 values");

  Quantity q = Quantity::dynamical();
  RateStudyOptions opts;
  if (config.contains("study")) {
    const json& s = config.at("study");
    require_keys(s, {"quantity", "p", "target_exponent", "slope_tolerance"}, "study");
    const std::string qname = s.contains("quantity") ? s.at("quantity").get<std::string>()
                                                      : std::string("dynamical");
    if (qname == "boundary")
      q = Quantity::boundary();
    else if (qname == "dynamical")
      q = Quantity::dynamical();
    else if (qname == "exit_error")
      q = Quantity::exit_error(s.contains("p") ? s.at("p").get<int>() : 1);
    else if (qname == "space_error")
      q = Quantity::space_error();
    else
      throw ConfigError("study.quantity: unknown quantity '" + qname + "'");
    if (s.contains("target_exponent"))
      opts.target_exponent = s.at("target_exponent").get<double>();
    if (s.contains("slope_tolerance"))
      opts.slope_tolerance = s.at("slope_tolerance").get<double>();
  }
  opts.h_list = r.h_list;
  opts.n_paths = r.n_paths;
  opts.seed = r.seed;
  opts.x0 = r.x0;
  opts.x0_uniform = r.x0_uniform;
  opts.threads = threads;
  opts.refine_factor = r.refine_factor;
  r.echo["study"] = {{"quantity", q.label()},
                     {"target_exponent", opts.target_exponent},
                     {"slope_tolerance", opts.slope_tolerance}};

  const RateTable table = run_rate_study(*r.problem, *r.candidate, r.weight, q, opts);
  write_file(join_path(r.outdir, "rate_table.csv"), rate_table_to_csv(table));
  write_file(join_path(r.outdir, "rate_summary.json"),
             rate_table_to_json(table, q.label()).dump(2) + "\n");
  write_echo(r);
  return kExitOk;
}

int cmd_exit_study(const json& config, const std::string& outdir, int threads) {
  Resolved r = resolve(config, outdir,
                       {"problem", "grid", "sampling", "refine", "study", "output"}, false);
  if (r.h_list.size() < 1) throw ConfigError("grid.h_list: required");
  std::vector<int> p_list = {1, 2};
  if (config.contains("study")) {
    require_keys(config.at("study"), {"p_list"}, "study");
    if (config.at("study").contains("p_list")) {
      p_list.clear();
      for (const auto& v : config.at("study").at("p_list")) p_list.push_back(v.get<int>());
    }
  }
  r.echo["study"] = {{"p_list", p_list}};

  struct Acc {
    std::vector<MeanAcc> tau;
    MeanAcc space, theta;
    long long censored = 0;
  };
  std::ostringstream csv;
  csv << "h,n_paths,n_censored";
  for (int p : p_list) csv << ",tau_p" << p << "_mean,tau_p" << p << "_se";
  csv << ",space_mean,space_se,theta_gap_mean,theta_gap_se\n";

  json rows = json::array();
  std::vector<double> hs, tau1_means, space_means;
  std::sort(r.h_list.begin(), r.h_list.end(), std::greater<double>());
  for (std::size_t hi = 0; hi < r.h_list.size(); ++hi) {
    const double h = r.h_list[hi];
    const std::uint64_t row_seed = derive_seed(r.seed, static_cast<std::uint64_t>(hi));
    const std::uint64_t sim_key = derive_seed(row_seed, "simulate");
    const std::uint64_t refine_key = derive_seed(row_seed, "refine");
    RefineOptions ro;
    ro.factor = r.refine_factor;
    const ProblemSpec& prob = *r.problem;
    auto work = [&](Acc& acc, long long id) {
      if (acc.tau.empty()) acc.tau.resize(p_list.size());
      const GridPath path =
          simulate_path(prob, r.x0, h, RngStream(sim_key, static_cast<std::uint64_t>(id)));
      if (!path.exited) {
        ++acc.censored;
        return;
      }
      const RefinedPath ref = refine_reference(path, prob, ro, refine_key);
      if (ref.reference_censored) {
        ++acc.censored;
        return;
      }
      const double diff = std::abs(ref.tau_ref - ref.tau_bar);
      for (std::size_t i = 0; i < p_list.size(); ++i)
        acc.tau[i].add(std::pow(diff, p_list[i]));
      acc.space.add((ref.x_tau_ref - ref.xbar_exit).squaredNorm());
      const double gap = ref.tau_bar - ref.theta_plus;
      acc.theta.add(gap * gap);
    };
    auto merge = [&](Acc& into, const Acc& from) {
      if (into.tau.empty()) into.tau.resize(p_list.size());
      for (std::size_t i = 0; i < p_list.size(); ++i) into.tau[i].merge(from.tau[i]);
      into.space.merge(from.space);
      into.theta.merge(from.theta);
      into.censored += from.censored;
    };
    Acc acc = run_chunked<Acc>(r.n_paths, threads, work, merge);
    if (acc.tau.empty()) acc.tau.resize(p_list.size());

    csv << format_double(h) << ',' << acc.space.n << ',' << acc.censored;
    json row;
    row["h"] = h;
    row["n_paths"] = acc.space.n;
    row["n_censored"] = acc.censored;
    json taus = json::array();
    for (std::size_t i = 0; i < p_list.size(); ++i) {
      csv << ',' << format_double(acc.tau[i].mean()) << ','
          << format_double(acc.tau[i].stderr_of_mean());
      taus.push_back({{"p", p_list[i]},
                      {"mean", acc.tau[i].mean()},
                      {"se", acc.tau[i].stderr_of_mean()}});
    }
    row["tau_error"] = taus;
    csv << ',' << format_double(acc.space.mean()) << ','
        << format_double(acc.space.stderr_of_mean()) << ','
        << format_double(acc.theta.mean()) << ','
        << format_double(acc.theta.stderr_of_mean()) << '\n';
    row["space_mean"] = acc.space.mean();
    row["space_se"] = acc.space.stderr_of_mean();
    row["theta_gap_mean"] = acc.theta.mean();
    row["theta_gap_se"] = acc.theta.stderr_of_mean();
    rows.push_back(row);
    hs.push_back(h);
    if (!p_list.empty() && p_list[0] == 1) tau1_means.push_back(acc.tau[0].mean());
    space_means.push_back(acc.space.mean());
  }
  json summary;
  summary["rows"] = rows;
  if (hs.size() >= 3) {
    if (tau1_means.size() == hs.size()) {
      const SlopeFit f = fit_loglog(hs, tau1_means);
      summary["tau_p1_slope"] = f.slope;
    }
    const SlopeFit fs = fit_loglog(hs, space_means);
    summary["space_slope"] = fs.slope;
  }
  write_file(join_path(r.outdir, "exit_table.csv"), csv.str());
  write_file(join_path(r.outdir, "exit_summary.json"), summary.dump(2) + "\n");
  write_echo(r);
  return kExitOk;
}

int cmd_decompose_check(const json& config, const std::string& outdir, int threads) {
  Resolved r = resolve(
      config, outdir,
      {"problem", "candidate", "grid", "sampling", "refine", "decompose", "output"}, true);
  if (!(r.h > 0.0)) throw ConfigError("grid.h: required and must be positive");
  long long min_straddling = 1000;
  if (config.contains("decompose")) {
    require_keys(config.at("decompose"), {"min_straddling"}, "decompose");
    if (config.at("decompose").contains("min_straddling"))
      min_straddling = config.at("decompose").at("min_straddling").get<long long>();
  }
  r.echo["decompose"] = {{"min_straddling", min_straddling}};

  const std::uint64_t sim_key = derive_seed(r.seed, "simulate");
  const std::uint64_t refine_key = derive_seed(r.seed, "refine");
  RefineOptions ro;
  ro.factor = r.refine_factor;
  const ProblemSpec& p = *r.problem;
  const CandidateFunction& u = *r.candidate;

  struct Acc {
    long long steps = 0, straddling = 0;
    double max_violation = 0.0;
  };
  auto work = [&](Acc& acc, long long id) {
    const GridPath path =
        simulate_path(p, r.x0, r.h, RngStream(sim_key, static_cast<std::uint64_t>(id)));
    if (!path.exited) return;
    const RefinedPath ref = refine_reference(path, p, ro, refine_key);
    for (long k = 0; k < path.exit_index; ++k) {
      const StepDecomposition dec = decomposition(u, p, path, ref, k);
      const double t = static_cast<double>(k) * path.h;
      const double lhs = (t < ref.theta_time ? dec.pre : 0.0) +
                         (ref.theta_time < t + path.h ? dec.post : 0.0) +
                         (dec.straddling ? dec.overlap : 0.0);
      const double viol = std::abs(lhs - loss_summand(u, p, path, k));
      acc.max_violation = std::max(acc.max_violation, viol);
      ++acc.steps;
      if (dec.straddling) ++acc.straddling;
    }
  };
  auto merge = [](Acc& into, const Acc& from) {
    into.steps += from.steps;
    into.straddling += from.straddling;
    into.max_violation = std::max(into.max_violation, from.max_violation);
  };
  Acc acc = run_chunked<Acc>(r.n_paths, threads, work, merge);

  json doc;
  doc["n_paths"] = r.n_paths;
  doc["n_steps"] = acc.steps;
  doc["n_straddling"] = acc.straddling;
  doc["max_violation"] = acc.max_violation;
  doc["straddling_target"] = min_straddling;
  doc["enough_straddling"] = acc.straddling >= min_straddling;
  doc["pass"] = acc.max_violation <= 1e-10 && acc.straddling >= min_straddling;
  write_file(join_path(r.outdir, "decompose_report.json"), doc.dump(2) + "\n");
  write_echo(r);
  return kExitOk;
}

int cmd_wald(const json& config, const std::string& outdir, int threads) {
  Resolved r = resolve(config, outdir, {"problem", "grid", "sampling", "wald", "output"}, false);
  if (!(r.h > 0.0)) throw ConfigError("grid.h: required and must be positive");
  WaldFunctional a = WaldFunctional::squared_increment();
  if (config.contains("wald")) {
    require_keys(config.at("wald"), {"functional"}, "wald");
    const std::string f = config.at("wald").contains("functional")
                              ? config.at("wald").at("functional").get<std::string>()
                              : std::string("dw_squared");
    if (f == "dw_squared") a = WaldFunctional::squared_increment();
    else if (f == "constant_h") a = WaldFunctional::constant_h();
    else throw ConfigError("wald.functional: unknown functional '" + f + "'");
  }
  r.echo["wald"] = {{"functional", a.kind == WaldFunctional::Kind::ConstantH ? "constant_h"
                                                                             : "dw_squared"}};
  const WaldReport rep = wald_test(*r.problem, r.h, a, r.n_paths, r.seed, r.x0, threads);
  write_file(join_path(r.outdir, "wald_report.json"), wald_to_json(rep).dump(2) + "\n");
  write_echo(r);
  return kExitOk;
}

int cmd_train(const json& config, const std::string& outdir, int threads) {
  Resolved r = resolve(config, outdir, {"problem", "weight", "train", "sampling", "output"},
                       false);
  if (!config.contains("train")) throw ConfigError("config: missing required section 'train'");
  const json& t = config.at("train");
  require_keys(t,
               {"family", "width", "poly_degree", "h", "batch", "iterations", "rate0", "decay",
                "grad_mode", "fd_step", "eval_every", "fixed_dataset"},
               "train");
  TrainConfig cfg;
  cfg.problem = r.problem;
  cfg.weight = r.weight;
  cfg.seed = r.seed;
  cfg.x0 = r.x0;
  cfg.x0_uniform = r.x0_uniform;
  cfg.threads = threads;
  if (t.contains("family")) {
    const std::string fam = t.at("family").get<std::string>();
    if (fam == "net") cfg.family = TrainConfig::Family::Net;
    else if (fam == "polynomial") cfg.family = TrainConfig::Family::Polynomial;
    else throw ConfigError("train.family: unknown family '" + fam + "'");
  }
  if (t.contains("width")) cfg.width = t.at("width").get<int>();
  if (t.contains("poly_degree")) cfg.poly_degree = t.at("poly_degree").get<int>();
  if (t.contains("h")) cfg.h = t.at("h").get<double>();
  if (t.contains("batch")) cfg.batch = t.at("batch").get<long long>();
  if (t.contains("iterations")) cfg.iterations = t.at("iterations").get<long>();
  if (t.contains("rate0")) cfg.rate0 = t.at("rate0").get<double>();
  if (t.contains("decay")) cfg.decay = t.at("decay").get<double>();
  if (t.contains("fd_step")) cfg.fd_step = t.at("fd_step").get<double>();
  if (t.contains("eval_every")) cfg.eval_every = t.at("eval_every").get<long>();
  if (t.contains("fixed_dataset")) cfg.fixed_dataset = t.at("fixed_dataset").get<bool>();
  if (t.contains("grad_mode")) {
    const std::string gm = t.at("grad_mode").get<std::string>();
    if (gm == "forward") cfg.grad_mode = TrainConfig::GradMode::ForwardSensitivity;
    else if (gm == "fd") cfg.grad_mode = TrainConfig::GradMode::CentralDifference;
    else throw ConfigError("train.grad_mode: expected \"forward\" or \"fd\"");
  }
  r.echo["train"] = {{"family", cfg.family == TrainConfig::Family::Net ? "net" : "polynomial"},
                     {"width", cfg.width},
                     {"poly_degree", cfg.poly_degree},
                     {"h", cfg.h},
                     {"batch", cfg.batch},
                     {"iterations", cfg.iterations},
                     {"rate0", cfg.rate0},
                     {"decay", cfg.decay},
                     {"grad_mode",
                      cfg.grad_mode == TrainConfig::GradMode::ForwardSensitivity ? "forward"
                                                                                 : "fd"},
                     {"fd_step", cfg.fd_step},
                     {"eval_every", cfg.eval_every},
                     {"fixed_dataset", cfg.fixed_dataset}};

  const FitResult res = fit(cfg);
  json checkpoint;
  checkpoint["candidate"] = candidate_to_json(*res.candidate);
  checkpoint["optimizer"] = {{"iterations_run", res.iterations_run},
                             {"rate0", cfg.rate0},
                             {"decay", cfg.decay},
                             {"seed", cfg.seed}};
  write_file(join_path(r.outdir, "checkpoint.json"), checkpoint.dump(2) + "\n");
  write_file(join_path(r.outdir, "history.csv"), history_to_csv(res.history));
  json summary;
  summary["diverged"] = res.diverged;
  summary["iterations_run"] = res.iterations_run;
  if (!res.history.empty()) {
    summary["final_loss"] = res.history.back().loss;
    summary["final_sup_err"] = res.history.back().sup_err;
    summary["final_dnorm"] = res.history.back().dnorm;
  }
  write_file(join_path(r.outdir, "train_summary.json"), summary.dump(2) + "\n");
  write_echo(r);
  return kExitOk;
}

int cmd_validate(const json& config, const std::string& outdir, int threads) {
  (void)threads;
  Resolved r = resolve(config, outdir, {"problem", "validation", "output"}, false);
  long n_samples = 512;
  ValidationOptions vo;
  if (config.contains("validation")) {
    const json& v = config.at("validation");
    require_keys(v, {"n_samples", "y_range", "z_box"}, "validation");
    if (v.contains("n_samples")) n_samples = v.at("n_samples").get<long>();
    if (v.contains("y_range")) {
      vo.y_lo = v.at("y_range")[0].get<double>();
      vo.y_hi = v.at("y_range")[1].get<double>();
    }
    if (v.contains("z_box")) vo.z_box = v.at("z_box").get<double>();
  }
  r.echo["validation"] = {{"n_samples", n_samples},
                          {"y_range", {vo.y_lo, vo.y_hi}},
                          {"z_box", vo.z_box}};
  const ValidationReport rep = validate(*r.problem, n_samples, vo);
  write_file(join_path(r.outdir, "validation_report.json"),
             validation_to_json(rep).dump(2) + "\n");
  write_echo(r);
  return kExitOk;
}

int cmd_verify_all(const json& config, const std::string& outdir, int threads,
                   std::ostream& out) {
  Resolved r = resolve(config, outdir, {"output"}, false);
  const AcceptanceReport rep = run_acceptance(threads, out);
  write_file(join_path(r.outdir, "acceptance.json"), acceptance_to_json(rep).dump(2) + "\n");
  write_echo(r);
  return rep.all_pass ? kExitOk : kExitAcceptance;
}

int run_command(const std::string& command, const std::string& config_path,
                const std::string& outdir, int threads, std::ostream& out, std::ostream& err) {
  try {
    const json config = load_config(config_path);
    if (command == "simulate") return cmd_simulate(config, outdir, threads);
    if (command == "loss-eval") return cmd_loss_eval(config, outdir, threads);
    if (command == "rate-study") return cmd_rate_study(config, outdir, threads);
    if (command == "exit-study") return cmd_exit_study(config, outdir, threads);
    if (command == "decompose-check") return cmd_decompose_check(config, outdir, threads);
    if (command == "wald") return cmd_wald(config, outdir, threads);
    if (command == "train") return cmd_train(config, outdir, threads);
    if (command == "validate") return cmd_validate(config, outdir, threads);
    if (command == "verify-all") return cmd_verify_all(config, outdir, threads, out);
    err << "unknown command: " << command << "\n";
    return kExitConfig;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const json::exception& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what();
    if (e.path_id >= 0) err << " (path " << e.path_id << ", step " << e.step << ")";
    err << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
}

}  // namespace exitbsde
