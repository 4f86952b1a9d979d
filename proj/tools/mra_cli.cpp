// Command-line front end: generate synthetic observation sets, run the
// recovery solvers on stored data, and reproduce the experiment sweeps as
// CSV reports plus SVG line plots.
//
// Exit codes: 0 success, 1 usage error, 2 solver failure, 3 I/O failure.

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mra/mra.hpp"

namespace {

using namespace mra;

Signal haar_like_signal(int L) {
  // Piecewise-constant four-level step signal.
  Vec x(L);
  const double levels[4] = {1.0, -1.0, 0.5, -0.25};
  for (int i = 0; i < L; ++i) x[i] = levels[(4 * i) / L];
  return Signal(std::move(x));
}

Signal parse_signal_spec(const std::string& spec, int L, SplitMix64& rng) {
  if (spec == "gaussian") {
    Vec x(L);
    for (int i = 0; i < L; ++i) x[i] = rng.next_normal();
    x /= x.norm();
    return Signal(std::move(x));
  }
  if (spec == "haar") return haar_like_signal(L);
  if (spec.rfind("file:", 0) == 0) {
    RecoveryResult truth = load_recovery_csv(spec.substr(5));
    if (truth.x_hat.size() != L)
      throw std::invalid_argument("signal file length does not match --L");
    return truth.x_hat;
  }
  throw CLI::ValidationError("--signal", "expected gaussian | haar | file:PATH");
}

std::vector<double> parse_double_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
  return out;
}

DistributionSpec parse_distribution_spec(const std::string& text) {
  DistributionSpec spec;
  auto split = [](const std::string& s) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ':')) parts.push_back(tok);
    return parts;
  };
  auto parts = split(text);
  const std::string& name = parts[0];
  if (name == "uniform") {
    spec.kind = DistributionKind::uniform;
  } else if (name == "dirac") {
    spec.kind = DistributionKind::dirac;
    if (parts.size() > 1) spec.dirac_index = std::stoi(parts[1]);
  } else if (name == "wg" || name == "wrapped_gaussian") {
    spec.kind = DistributionKind::wrapped_gaussian;
    if (parts.size() > 1) spec.s = std::stod(parts[1]);
  } else if (name == "simplex" || name == "random_simplex") {
    spec.kind = DistributionKind::random_simplex;
  } else if (name == "periodic") {
    if (parts.size() < 2)
      throw CLI::ValidationError("--dist", "periodic:BASE1,BASE2,...");
    spec.kind = DistributionKind::periodic;
    auto base = parse_double_list(parts[1]);
    spec.period = static_cast<int>(base.size());
    spec.values = Eigen::Map<Vec>(base.data(), static_cast<Eigen::Index>(base.size()));
  } else if (name == "explicit") {
    if (parts.size() < 2)
      throw CLI::ValidationError("--dist", "explicit:P1,P2,...");
    spec.kind = DistributionKind::explicit_vector;
    auto vals = parse_double_list(parts[1]);
    spec.values = Eigen::Map<Vec>(vals.data(), static_cast<Eigen::Index>(vals.size()));
  } else {
    throw CLI::ValidationError("--dist", "unknown distribution kind: " + name);
  }
  return spec;
}

RecoveryResult truth_container(const Signal& x, const DistributionVec& rho) {
  RecoveryResult t;
  t.x_hat = x;
  t.rho_hat = rho;
  return t;
}

int cmd_generate(const GeneratorConfig& config, const std::string& signal_spec,
                 const std::string& out, bool csv, const std::string& truth_out) {
  config.validate();
  SplitMix64 rng(config.seed);
  SplitMix64 sig_rng = rng.split(1), dist_rng = rng.split(2), obs_rng = rng.split(3);
  Signal x = parse_signal_spec(signal_spec, config.L, sig_rng);
  DistributionVec rho = make_distribution(config.distribution, config.L, dist_rng);
  ObservationSet obs = sample_observations(x, rho, config.sigma, config.N, obs_rng);
  if (csv)
    save_observations_csv(obs, out);
  else
    save_observations(obs, out);
  if (!truth_out.empty()) save_recovery_csv(truth_container(x, rho), truth_out);
  std::printf("wrote %s: L=%d N=%lld sigma=%g signal=%s dist kind=%d\n",
              out.c_str(), config.L, static_cast<long long>(config.N),
              config.sigma, signal_spec.c_str(),
              static_cast<int>(config.distribution.kind));
  return 0;
}

int cmd_recover(const std::string& in, const std::string& method,
                const std::string& out, const std::string& truth_path,
                uint64_t seed, int max_iters, double tol, bool no_reshuffle,
                const std::string& em_init) {
  ObservationSet obs = load_observations_any(in);
  SplitMix64 rng(seed);
  RecoveryResult res;
  if (method == "spectral") {
    SpectralOptions opts;
    opts.reshuffle = !no_reshuffle;
    res = recover(obs, opts, rng);
  } else if (method == "em" || method == "uniform_em") {
    EmOptions opts;
    opts.variant = method == "em" ? EmVariant::modified : EmVariant::uniform;
    opts.max_iters = max_iters;
    opts.tol = tol;
    opts.init = em_init == "warm" ? EmInit::spectral_warm_start : EmInit::random_normal;
    res = run_em(obs, opts, rng);
  } else if (method == "ls") {
    MomentPair m = sample_moments(obs);
    LsOptions opts;
    opts.max_iters = max_iters;
    res = run_ls(m, opts, rng);
  } else {
    throw CLI::ValidationError("--method", "expected spectral | em | uniform_em | ls");
  }
  save_recovery_csv(res, out);
  std::printf("wrote %s (method=%s", out.c_str(), method.c_str());
  for (const auto& [key, value] : res.diagnostics)
    std::printf(", %s=%g", key.c_str(), value);
  std::printf(")\n");
  if (!truth_path.empty()) {
    RecoveryResult truth = load_recovery_csv(truth_path);
    double rel = relative_error(res.x_hat, truth.x_hat);
    std::printf("relative error vs truth: %.6g\n", rel);
    if (truth.rho_hat.size() == res.rho_hat.size() && truth.rho_hat.size() > 0) {
      int s = align(res.x_hat, truth.x_hat).shift;
      double rho_err =
          (shift(res.rho_hat, s).probs - truth.rho_hat.probs).cwiseAbs().maxCoeff();
      std::printf("aligned rho max-abs error:  %.6g\n", rho_err);
    }
  }
  return 0;
}

void load_config_file(const std::string& path, ExperimentConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path);
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(" \t"));
      s.erase(s.find_last_not_of(" \t") + 1);
      return s;
    };
    std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (key.empty()) continue;
    if (key == "kind")
      cfg.kind = kind_from_name(value);
    else if (key == "seed")
      cfg.seed = std::stoull(value);
    else if (key == "threads")
      cfg.threads = std::stoi(value);
    else
      cfg.overrides[key] = value;
  }
}

int cmd_experiment(ExperimentConfig cfg, const std::string& out, bool svg) {
  ExperimentReport rep = run_experiment(cfg);
#ifdef MRA_GIT_REVISION
  rep.revision = MRA_GIT_REVISION;
#endif
  write_report_csv(rep, out);
  if (svg) {
    std::string svg_path = out;
    auto dot = svg_path.rfind('.');
    if (dot != std::string::npos) svg_path.resize(dot);
    svg_path += ".svg";
    write_report_svg(rep, svg_path);
  }
  std::printf("wrote %s: kind=%s rows=%zu wall=%.1fs\n", out.c_str(),
              kind_name(cfg.kind), rep.rows.size(), rep.wall_seconds);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multireference alignment: data generation, recovery, experiments"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "sample an observation set");
  GeneratorConfig gen_cfg;
  std::string gen_dist = "uniform", gen_signal = "gaussian", gen_out = "obs.bin";
  std::string gen_truth;
  bool gen_csv = false;
  gen->add_option("--L", gen_cfg.L, "signal length")->required();
  gen->add_option("--N", gen_cfg.N, "number of observations")->required();
  gen->add_option("--sigma", gen_cfg.sigma, "noise standard deviation");
  gen->add_option("--seed", gen_cfg.seed, "rng seed");
  gen->add_option("--dist", gen_dist,
                  "uniform | dirac[:i] | wg:S | simplex | periodic:B1,B2,.. | explicit:P1,..");
  gen->add_option("--signal", gen_signal, "gaussian | haar | file:PATH");
  gen->add_option("--out", gen_out, "output path")->required();
  gen->add_flag("--csv", gen_csv, "write CSV instead of binary");
  gen->add_option("--truth-out", gen_truth, "also write the true (x, rho)");

  // recover
  auto* rec = app.add_subcommand("recover", "run a solver on stored observations");
  std::string rec_in, rec_method = "spectral", rec_out = "recovery.csv", rec_truth;
  std::string rec_init = "random";
  uint64_t rec_seed = 1;
  int rec_iters = 500;
  double rec_tol = 1e-8;
  bool rec_noshuffle = false;
  rec->add_option("--in", rec_in, "observation file")->required();
  rec->add_option("--method", rec_method, "spectral | em | uniform_em | ls");
  rec->add_option("--out", rec_out, "recovery CSV path");
  rec->add_option("--truth", rec_truth, "truth file for error reporting");
  rec->add_option("--seed", rec_seed, "rng seed");
  rec->add_option("--max-iters", rec_iters, "iteration cap (em/ls)");
  rec->add_option("--tol", rec_tol, "stopping tolerance (em)");
  rec->add_flag("--no-reshuffle", rec_noshuffle, "disable reshuffling (spectral)");
  rec->add_option("--init", rec_init, "em initialization: random | warm");

  // experiment
  auto* exp = app.add_subcommand("experiment", "run a parameter sweep");
  ExperimentConfig exp_cfg;
  std::string exp_kind = "method_compare", exp_out = "report.csv", exp_config;
  std::vector<std::string> exp_sets;
  bool exp_svg = true;
  exp->add_option("--kind", exp_kind,
                  "slope_random | slope_uniform | em_compare | method_compare | "
                  "spiked | counterexample | bounds_table");
  exp->add_option("--seed", exp_cfg.seed, "rng seed");
  exp->add_option("--threads", exp_cfg.threads, "worker threads");
  exp->add_flag("--paper-scale", exp_cfg.paper_scale, "full trial counts");
  exp->add_option("--config", exp_config, "key=value config file");
  exp->add_option("--set", exp_sets, "override, e.g. --set trials=10")->take_all();
  exp->add_option("--out", exp_out, "report CSV path");
  exp->add_flag("!--no-svg", exp_svg, "skip the SVG plot");

  // bounds
  auto* bnd = app.add_subcommand("bounds", "orbit lower-bound table for a counterexample pair");
  int bnd_L = 15, bnd_ell = 5, bnd_threads = default_threads();
  uint64_t bnd_seed = 1;
  std::string bnd_out = "bounds.csv";
  bnd->add_option("--L", bnd_L, "signal length");
  bnd->add_option("--ell", bnd_ell, "distribution period");
  bnd->add_option("--seed", bnd_seed, "rng seed");
  bnd->add_option("--out", bnd_out, "report CSV path");
  bnd->add_option("--threads", bnd_threads, "worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) {
      gen_cfg.distribution = parse_distribution_spec(gen_dist);
      return cmd_generate(gen_cfg, gen_signal, gen_out, gen_csv, gen_truth);
    }
    if (rec->parsed())
      return cmd_recover(rec_in, rec_method, rec_out, rec_truth, rec_seed,
                         rec_iters, rec_tol, rec_noshuffle, rec_init);
    if (exp->parsed()) {
      if (!exp_config.empty()) load_config_file(exp_config, exp_cfg);
      exp_cfg.kind = kind_from_name(exp_kind);
      for (const std::string& kv : exp_sets) {
        auto eq = kv.find('=');
        if (eq == std::string::npos)
          throw CLI::ValidationError("--set", "expected key=value");
        exp_cfg.overrides[kv.substr(0, eq)] = kv.substr(eq + 1);
      }
      return cmd_experiment(exp_cfg, exp_out, exp_svg);
    }
    if (bnd->parsed()) {
      ExperimentConfig cfg;
      cfg.kind = ExperimentKind::bounds_table;
      cfg.seed = bnd_seed;
      cfg.threads = bnd_threads;
      cfg.overrides["L"] = std::to_string(bnd_L);
      cfg.overrides["ell"] = std::to_string(bnd_ell);
      return cmd_experiment(cfg, bnd_out, false);
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const mra::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  } catch (const mra::SpectralError& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    for (const auto& [key, value] : e.diagnostics)
      std::cerr << "  " << key << " = " << value << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
