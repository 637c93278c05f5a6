// valse_cli: Monte Carlo sweeps, single-record estimation and CRB curves.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <optional>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "valse/crb.hpp"
#include "valse/harness.hpp"
#include "valse/quantizer.hpp"
#include "valse/valse_ep.hpp"

#ifndef VALSE_GIT_REVISION
#define VALSE_GIT_REVISION "unknown"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace valse;

namespace {

constexpr int kExitConfig = 2;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CVector read_samples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::vector<cplx> values;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    double re = 0.0, im = 0.0;
    std::string rest;
    if (!(ls >> re >> im) || (ls >> rest))
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected 're,im'");
    values.emplace_back(re, im);
  }
  if (values.size() < 2) throw std::runtime_error(path + ": need at least two samples");
  CVector y(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) y[static_cast<Eigen::Index>(i)] = values[i];
  return y;
}

json quantizer_json(const QuantizerSpec& q) {
  json thresholds = json::array();
  for (double t : q.thresholds) {
    if (std::isinf(t)) thresholds.push_back(t < 0 ? "-inf" : "inf");
    else thresholds.push_back(t);
  }
  return {{"bit_depth", q.bit_depth},
          {"clip_halfwidth", q.clip_halfwidth},
          {"thresholds", thresholds},
          {"levels", q.levels}};
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir, int threads,
                 std::optional<std::uint64_t> seed, std::optional<int> trials) {
  ExperimentConfig exp;
  try {
    exp = parse_experiment(read_file(config_path));
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  for (auto& s : exp.scenarios) {
    if (seed) s.seed = *seed;
    if (trials) s.trials = *trials;
  }
  if (threads >= 0) exp.threads = threads;

  fs::create_directories(out_dir);
  std::vector<TrialRecord> rows;
  json meta;
  meta["config"] = json::parse(exp.source);
  meta["git_revision"] = VALSE_GIT_REVISION;
  meta["scenarios"] = json::array();
  for (std::size_t i = 0; i < exp.scenarios.size(); ++i) {
    const auto& s = exp.scenarios[i];
    std::cerr << "scenario " << i + 1 << "/" << exp.scenarios.size() << ": N=" << s.n
              << " K=" << s.k << " snr=" << s.snr_db << " bits=" << bit_depth_label(s.bit_depth)
              << " trials=" << s.trials << '\n';
    auto part = run_scenario(s, static_cast<int>(i), exp.threads);
    rows.insert(rows.end(), part.begin(), part.end());
    json sj = {{"scenario", i},       {"N", s.n},         {"K", s.k},
               {"snr_db", s.snr_db},  {"bits", bit_depth_label(s.bit_depth)},
               {"trials", s.trials},  {"seed", s.seed}};
    if (const auto q = scenario_quantizer(s)) sj["quantizer"] = quantizer_json(*q);
    meta["scenarios"].push_back(sj);
  }
  const auto agg = aggregate(exp.scenarios, rows);
  std::ofstream trials_out(fs::path(out_dir) / "trials.csv");
  write_trials_csv(trials_out, rows);
  std::ofstream timing_out(fs::path(out_dir) / "timing.csv");
  write_timing_csv(timing_out, rows);
  std::ofstream agg_out(fs::path(out_dir) / "aggregate.csv");
  write_aggregate_csv(agg_out, agg);
  std::ofstream meta_out(fs::path(out_dir) / "metadata.json");
  meta_out << meta.dump(2) << '\n';
  write_aggregate_csv(std::cout, agg);
  return 0;
}

int cmd_estimate(const std::string& samples_path, const std::string& quantizer_path,
                 const std::string& bits, double sigma_z, const RunConfig& cfg,
                 const std::string& out_path) {
  const CVector y = read_samples(samples_path);
  std::optional<QuantizerSpec> spec;
  if (!quantizer_path.empty()) {
    json q;
    try {
      q = json::parse(read_file(quantizer_path));
      for (const auto& [key, value] : q.items())
        if (key != "bit_depth" && key != "sigma_z") {
          std::cerr << "error: unknown quantizer key '" << key << "'\n";
          return kExitConfig;
        }
      spec = build_uniform(q.at("bit_depth").get<int>(), q.at("sigma_z").get<double>());
    } catch (const json::exception& e) {
      std::cerr << "error: malformed quantizer file: " << e.what() << '\n';
      return kExitConfig;
    }
  } else if (bits != "inf") {
    spec = build_uniform(std::stoi(bits), sigma_z);
  }

  const Observation obs = spec ? Observation::quantized(*spec, y) : Observation::unquantized(y);
  const RunOutput out = run(obs, cfg);
  json result;
  result["model_order"] = out.estimate.model_order;
  result["frequencies"] = out.estimate.freqs;
  json weights = json::array();
  for (const auto& w : out.estimate.weights) weights.push_back({w.real(), w.imag()});
  result["weights"] = weights;
  result["iterations"] = out.trace.iterations();
  result["converged"] = out.trace.converged;
  result["noise_var"] = out.trace.records.empty() ? 0.0 : out.trace.records.back().sigma2;
  if (spec) result["quantizer"] = quantizer_json(*spec);
  json trace = json::array();
  for (const auto& r : out.trace.records)
    trace.push_back({{"iteration", r.iteration}, {"K_hat", r.model_order}, {"sigma2", r.sigma2},
                     {"rho", r.rho}, {"tau", r.tau}, {"rel_change", r.rel_change}});
  result["trace"] = trace;
  const std::string text = result.dump(2);
  if (out_path.empty()) {
    std::cout << text << '\n';
  } else {
    std::ofstream(out_path) << text << '\n';
  }
  return 0;
}

int cmd_crb(const std::string& config_path, const std::string& out_path) {
  ExperimentConfig exp;
  try {
    exp = parse_experiment(read_file(config_path));
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  std::ostringstream csv;
  csv << "N,K,snr_db,bits,crb_trace,crb_db\n";
  for (const auto& s : exp.scenarios) {
    const double tr = scenario_crb_trace(s);
    csv << s.n << ',' << s.k << ',' << s.snr_db << ',' << bit_depth_label(s.bit_depth) << ','
        << tr << ',' << to_db(tr) << '\n';
  }
  if (out_path.empty()) {
    std::cout << csv.str();
  } else {
    std::ofstream(out_path) << csv.str();
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Line spectral estimation from quantized samples"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "results", samples_path, quantizer_path, out_path;
  std::string bits = "inf";
  double sigma_z = 1.0;
  int threads = -1;
  std::uint64_t seed = 0;
  int trials = 0;
  RunConfig run_cfg;
  double noise_var = 0.0;

  auto* sim = app.add_subcommand("simulate", "Monte Carlo sweep to CSV");
  sim->add_option("-c,--config", config_path, "JSON experiment config")->required()->check(CLI::ExistingFile);
  sim->add_option("-o,--out", out_dir, "output directory");
  sim->add_option("-j,--threads", threads, "worker threads (0 = all cores)");
  auto* seed_opt = sim->add_option("--seed", seed, "override master seed");
  auto* trials_opt = sim->add_option("--trials", trials, "override trial count")->check(CLI::PositiveNumber);

  auto* est = app.add_subcommand("estimate", "estimate a line spectrum from a sample file");
  est->add_option("-s,--samples", samples_path, "text file, one 're,im' pair per line")
      ->required()
      ->check(CLI::ExistingFile);
  est->add_option("-q,--quantizer", quantizer_path, "JSON sidecar {bit_depth, sigma_z}")
      ->check(CLI::ExistingFile);
  est->add_option("-b,--bits", bits, "bit depth or 'inf' when no sidecar is given");
  est->add_option("--sigma-z", sigma_z, "quantizer scale (with --bits)")->check(CLI::PositiveNumber);
  est->add_option("--max-iters", run_cfg.max_iters)->check(CLI::PositiveNumber);
  est->add_option("--tol", run_cfg.tol)->check(CLI::PositiveNumber);
  auto* nv_opt = est->add_option("--noise-var", noise_var, "known noise variance (disables learning)")
                     ->check(CLI::PositiveNumber);
  est->add_option("-o,--out", out_path, "output JSON file (default stdout)");

  auto* crb = app.add_subcommand("crb", "frequency CRB curves as CSV");
  crb->add_option("-c,--config", config_path, "JSON experiment config")->required()->check(CLI::ExistingFile);
  crb->add_option("-o,--out", out_path, "output CSV (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*sim) {
      return cmd_simulate(config_path, out_dir, threads,
                          *seed_opt ? std::optional<std::uint64_t>(seed) : std::nullopt,
                          *trials_opt ? std::optional<int>(trials) : std::nullopt);
    }
    if (*est) {
      if (*nv_opt) {
        run_cfg.noise_var = noise_var;
        run_cfg.learn_noise = false;
      }
      return cmd_estimate(samples_path, quantizer_path, bits, sigma_z, run_cfg, out_path);
    }
    if (*crb) return cmd_crb(config_path, out_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
