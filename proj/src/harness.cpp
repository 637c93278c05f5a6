#include "valse/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>
#include <thread>

#include <json.hpp>

#include "valse/crb.hpp"
#include "valse/valse.hpp"

namespace valse {

std::string to_string(Algorithm a) {
  return a == Algorithm::valse_ep ? "valse_ep" : "valse_aqnm";
}

Algorithm algorithm_from_string(const std::string& name) {
  if (name == "valse_ep") return Algorithm::valse_ep;
  if (name == "valse_aqnm") return Algorithm::valse_aqnm;
  throw std::invalid_argument("unknown algorithm '" + name + "'");
}

std::string bit_depth_label(const std::optional<int>& bits) {
  return bits ? std::to_string(*bits) : "inf";
}

void validate(const ScenarioConfig& cfg) {
  if (cfg.n < 2) throw std::invalid_argument("N must be >= 2");
  if (cfg.k < 1) throw std::invalid_argument("K must be >= 1");
  if (cfg.trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (!std::isfinite(cfg.snr_db)) throw std::invalid_argument("snr_db must be finite");
  if (cfg.bit_depth && (*cfg.bit_depth < 1 || *cfg.bit_depth > 24))
    throw std::invalid_argument("bit_depth must be in 1..24 or inf");
  if (!cfg.fixed_freqs.empty() && static_cast<int>(cfg.fixed_freqs.size()) != cfg.k)
    throw std::invalid_argument("fixed frequency list must have K entries");
  if (cfg.fixed_freqs.empty() && cfg.k * (kTwoPi / cfg.n) >= kTwoPi)
    throw std::invalid_argument("K frequencies cannot be separated by 2pi/N");
  if (!(cfg.magnitude_std >= 0.0)) throw std::invalid_argument("magnitude_std must be >= 0");
  if (cfg.algorithms.empty()) throw std::invalid_argument("no algorithm selected");
  validate(cfg.run);
}

std::uint64_t trial_seed(std::uint64_t master, std::uint64_t trial) {
  auto mix = [](std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  };
  return mix(mix(master) ^ trial);
}

GroundTruth draw_truth(const ScenarioConfig& cfg, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> angle(-kPi, kPi);
  std::normal_distribution<double> magnitude(cfg.magnitude_mean, cfg.magnitude_std);
  GroundTruth t;
  if (!cfg.fixed_freqs.empty()) {
    t.freqs = cfg.fixed_freqs;
  } else {
    const double min_sep = kTwoPi / cfg.n;
    int failures = 0;
    for (;;) {
      t.freqs.clear();
      for (int i = 0; i < cfg.k; ++i) t.freqs.push_back(angle(rng));
      bool ok = true;
      for (int i = 0; i < cfg.k && ok; ++i)
        for (int j = i + 1; j < cfg.k && ok; ++j)
          ok = std::abs(wrap(t.freqs[i] - t.freqs[j])) > min_sep;
      if (ok) break;
      if (++failures >= 10000)
        throw std::runtime_error("draw_truth: frequency separation infeasible");
    }
  }
  for (int i = 0; i < cfg.k; ++i) {
    double g = magnitude(rng);
    for (int tries = 0; !(g > 0.0); ++tries) {
      if (tries > 1000) throw std::runtime_error("draw_truth: nonpositive magnitudes");
      g = magnitude(rng);
    }
    t.weights.push_back(std::polar(g, angle(rng)));
  }
  return t;
}

double noise_variance_for(const CVector& z, double snr_db) {
  const double energy = z.squaredNorm();
  if (!(energy > 0.0)) throw std::invalid_argument("noise_variance_for: zero signal");
  return energy / (static_cast<double>(z.size()) * std::pow(10.0, snr_db / 10.0));
}

CVector apply_noise_and_quantize(const CVector& z, double snr_db, const QuantizerSpec* spec,
                                 std::mt19937_64& rng, double* sigma2_out) {
  const double sigma2 = noise_variance_for(z, snr_db);
  std::normal_distribution<double> noise(0.0, std::sqrt(sigma2 / 2.0));
  CVector y(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double re = noise(rng);
    const double im = noise(rng);
    y[i] = z[i] + cplx(re, im);
  }
  if (sigma2_out) *sigma2_out = sigma2;
  return spec ? quantize(*spec, y) : y;
}

std::optional<QuantizerSpec> scenario_quantizer(const ScenarioConfig& cfg) {
  if (!cfg.bit_depth) return std::nullopt;
  return build_uniform(*cfg.bit_depth, std::sqrt(static_cast<double>(cfg.k)));
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double crb_trace_for(const GroundTruth& truth, const QuantizerSpec* spec, int n, double sigma2) {
  try {
    const RMatrix F = spec ? fim_quantized(truth, *spec, n, sigma2) : fim_unquantized(truth, n, sigma2);
    return crb_freq(F, static_cast<int>(truth.order())).trace();
  } catch (const SingularFisherError&) {
    return kNaN;
  }
}

std::vector<TrialRecord> run_trial(const ScenarioConfig& cfg, int scenario, int trial,
                                   const std::optional<QuantizerSpec>& spec) {
  std::vector<TrialRecord> rows;
  std::mt19937_64 rng(trial_seed(cfg.seed, static_cast<std::uint64_t>(trial)));
  GroundTruth truth;
  CVector z, y;
  double sigma2 = 0.0, crb = kNaN;
  std::string setup_error;
  try {
    truth = draw_truth(cfg, rng);
    z = synthesize(truth, cfg.n);
    y = apply_noise_and_quantize(z, cfg.snr_db, spec ? &*spec : nullptr, rng, &sigma2);
    crb = crb_trace_for(truth, spec ? &*spec : nullptr, cfg.n, sigma2);
  } catch (const std::exception& e) {
    setup_error = e.what();
  }

  const bool one_bit = cfg.bit_depth && *cfg.bit_depth == 1;
  for (Algorithm algo : cfg.algorithms) {
    TrialRecord r;
    r.scenario = scenario;
    r.trial = trial;
    r.algorithm = algo;
    r.k = cfg.k;
    r.metric = one_bit ? "dnmse" : "nmse";
    r.crb_trace = crb;
    r.freq_sq_error = kNaN;
    r.signal_db = kNaN;
    if (!setup_error.empty()) {
      r.failed = true;
      r.error = setup_error;
      r.k_hat = -1;
      rows.push_back(r);
      continue;
    }
    const auto start = std::chrono::steady_clock::now();
    try {
      EstimateResult est;
      if (algo == Algorithm::valse_ep) {
        const Observation obs =
            spec ? Observation::quantized(*spec, y) : Observation::unquantized(y);
        RunOutput out = run(obs, cfg.run);
        est = std::move(out.estimate);
        r.iterations = out.trace.iterations();
        r.converged = out.trace.converged;
      } else {
        ValseConfig vc;
        vc.max_iters = cfg.run.max_iters;
        vc.tol = cfg.run.tol;
        vc.noise_var = cfg.run.noise_var;
        const CVector yq = spec ? dequantize_aqnm(*spec, y) : y;
        ValseOutcome out = run_valse(yq, vc);
        est = std::move(out.estimate);
        r.iterations = out.iterations;
        r.converged = out.converged;
      }
      r.k_hat = static_cast<int>(est.model_order);
      r.signal_db = one_bit ? dnmse_db(est.spectrum, z) : nmse_db(est.spectrum, z);
      if (r.k_hat == r.k) r.freq_sq_error = freq_sq_error(est.freqs, truth.freqs);
    } catch (const std::exception& e) {
      r.failed = true;
      r.error = e.what();
      r.k_hat = -1;
    }
    r.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    rows.push_back(r);
  }
  return rows;
}

}  // namespace

std::vector<TrialRecord> run_scenario(const ScenarioConfig& cfg, int scenario_index, int threads) {
  validate(cfg);
  const auto spec = scenario_quantizer(cfg);
  std::vector<std::vector<TrialRecord>> per_trial(cfg.trials);
  int workers = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp(workers, 1, cfg.trials);

  std::atomic<int> next{0};
  auto work = [&] {
    for (int t = next++; t < cfg.trials; t = next++) per_trial[t] = run_trial(cfg, scenario_index, t, spec);
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  std::vector<TrialRecord> rows;
  for (auto& v : per_trial) rows.insert(rows.end(), v.begin(), v.end());
  return rows;
}

namespace {

double mean_db(const std::vector<double>& linear) {
  if (linear.empty()) return kNaN;
  double acc = 0.0;
  for (double v : linear) acc += v;
  return to_db(acc / static_cast<double>(linear.size()));
}

double median(std::vector<double> v) {
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

std::vector<AggregateRecord> aggregate(const std::vector<ScenarioConfig>& scenarios,
                                       const std::vector<TrialRecord>& trials) {
  std::vector<AggregateRecord> out;
  for (std::size_t s = 0; s < scenarios.size(); ++s) {
    const auto& cfg = scenarios[s];
    // Trials where every algorithm recovered the model order.
    std::map<int, int> correct_count;
    for (const auto& r : trials)
      if (r.scenario == static_cast<int>(s) && !r.failed && r.k_hat == r.k) ++correct_count[r.trial];
    std::set<int> joint;
    for (const auto& [trial, count] : correct_count)
      if (count == static_cast<int>(cfg.algorithms.size())) joint.insert(trial);

    for (Algorithm algo : cfg.algorithms) {
      AggregateRecord a;
      a.scenario = static_cast<int>(s);
      a.algorithm = algo;
      a.n = cfg.n;
      a.k = cfg.k;
      a.snr_db = cfg.snr_db;
      a.bits = bit_depth_label(cfg.bit_depth);
      std::vector<double> signal, freq, crb_gated, crb_all, freq_joint, iters;
      int success = 0, converged = 0;
      for (const auto& r : trials) {
        if (r.scenario != static_cast<int>(s) || r.algorithm != algo) continue;
        ++a.trials;
        a.metric = r.metric;
        if (std::isfinite(r.crb_trace)) crb_all.push_back(r.crb_trace);
        if (r.failed) {
          ++a.failures;
          continue;
        }
        signal.push_back(std::pow(10.0, r.signal_db / 10.0));
        iters.push_back(r.iterations);
        if (r.converged) ++converged;
        if (r.k_hat != r.k) continue;
        ++success;
        freq.push_back(r.freq_sq_error);
        if (std::isfinite(r.crb_trace)) crb_gated.push_back(r.crb_trace);
        if (joint.count(r.trial)) freq_joint.push_back(r.freq_sq_error);
      }
      if (a.trials == 0) continue;
      a.success_rate = static_cast<double>(success) / a.trials;
      a.converged_rate = static_cast<double>(converged) / a.trials;
      a.signal_db = mean_db(signal);
      a.gated = static_cast<int>(freq.size());
      a.freq_mse_db = mean_db(freq);
      a.crb_gated_db = mean_db(crb_gated);
      a.crb_db = mean_db(crb_all);
      a.joint_gated = static_cast<int>(freq_joint.size());
      a.freq_mse_joint_db = mean_db(freq_joint);
      a.median_iterations = median(iters);
      out.push_back(a);
    }
  }
  return out;
}

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string csv_text(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

void write_trials_csv(std::ostream& os, const std::vector<TrialRecord>& rows) {
  os << "scenario,trial,algorithm,K,K_hat,metric,signal_db,freq_sq_error,freq_mse_db,crb_trace,"
        "iterations,converged,failed,error\n";
  for (const auto& r : rows) {
    os << r.scenario << ',' << r.trial << ',' << to_string(r.algorithm) << ',' << r.k << ','
       << r.k_hat << ',' << r.metric << ',' << num(r.signal_db) << ',' << num(r.freq_sq_error)
       << ',' << (std::isnan(r.freq_sq_error) ? "nan" : num(to_db(r.freq_sq_error))) << ','
       << num(r.crb_trace) << ',' << r.iterations << ',' << (r.converged ? 1 : 0) << ','
       << (r.failed ? 1 : 0) << ',' << csv_text(r.error) << '\n';
  }
}

void write_timing_csv(std::ostream& os, const std::vector<TrialRecord>& rows) {
  os << "scenario,trial,algorithm,wall_ms\n";
  for (const auto& r : rows)
    os << r.scenario << ',' << r.trial << ',' << to_string(r.algorithm) << ',' << num(r.wall_ms)
       << '\n';
}

void write_aggregate_csv(std::ostream& os, const std::vector<AggregateRecord>& rows) {
  os << "scenario,algorithm,N,K,snr_db,bits,trials,failures,success_rate,metric,signal_db,"
        "gated,freq_mse_db,crb_gated_db,crb_db,joint_gated,freq_mse_joint_db,median_iterations,"
        "converged_rate\n";
  for (const auto& a : rows) {
    os << a.scenario << ',' << to_string(a.algorithm) << ',' << a.n << ',' << a.k << ','
       << num(a.snr_db) << ',' << a.bits << ',' << a.trials << ',' << a.failures << ','
       << num(a.success_rate) << ',' << a.metric << ',' << num(a.signal_db) << ',' << a.gated
       << ',' << num(a.freq_mse_db) << ',' << num(a.crb_gated_db) << ',' << num(a.crb_db) << ','
       << a.joint_gated << ',' << num(a.freq_mse_joint_db) << ',' << num(a.median_iterations)
       << ',' << num(a.converged_rate) << '\n';
  }
}

namespace {

using nlohmann::json;

template <typename T>
std::vector<T> as_list(const json& v, const std::string& key) {
  try {
    if (v.is_array()) return v.get<std::vector<T>>();
    return {v.get<T>()};
  } catch (const json::exception&) {
    throw ConfigError("invalid value for '" + key + "'", key);
  }
}

std::vector<std::optional<int>> bit_list(const json& v) {
  std::vector<std::optional<int>> out;
  const json items = v.is_array() ? v : json::array({v});
  for (const auto& b : items) {
    if (b.is_string() && b.get<std::string>() == "inf") {
      out.emplace_back(std::nullopt);
    } else if (b.is_number_integer()) {
      out.emplace_back(b.get<int>());
    } else {
      throw ConfigError("invalid value for 'bit_depth'", "bit_depth");
    }
  }
  return out;
}

}  // namespace

ExperimentConfig parse_experiment(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what(), "");
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object", "");

  static const std::set<std::string> known = {
      "N", "K", "snr_db", "bit_depth", "trials", "seed", "frequencies", "magnitude_mean",
      "magnitude_std", "algorithms", "max_iters", "tol", "learn_noise", "init_v_ext", "threads"};
  for (const auto& [key, value] : doc.items())
    if (!known.count(key)) throw ConfigError("unknown config key '" + key + "'", key);

  ScenarioConfig base;
  ExperimentConfig exp;
  auto scalar = [&](const char* key, auto& dst) {
    if (!doc.contains(key)) return;
    try {
      doc.at(key).get_to(dst);
    } catch (const json::exception&) {
      throw ConfigError(std::string("invalid value for '") + key + "'", key);
    }
  };
  scalar("trials", base.trials);
  scalar("seed", base.seed);
  scalar("frequencies", base.fixed_freqs);
  scalar("magnitude_mean", base.magnitude_mean);
  scalar("magnitude_std", base.magnitude_std);
  scalar("max_iters", base.run.max_iters);
  scalar("tol", base.run.tol);
  scalar("learn_noise", base.run.learn_noise);
  scalar("init_v_ext", base.run.init_v_ext);
  scalar("threads", exp.threads);
  if (doc.contains("algorithms")) {
    base.algorithms.clear();
    for (const auto& name : as_list<std::string>(doc["algorithms"], "algorithms")) {
      try {
        base.algorithms.push_back(algorithm_from_string(name));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what(), "algorithms");
      }
    }
  }
  const auto ns = doc.contains("N") ? as_list<int>(doc["N"], "N") : std::vector<int>{base.n};
  const auto ks = doc.contains("K") ? as_list<int>(doc["K"], "K") : std::vector<int>{base.k};
  const auto snrs = doc.contains("snr_db") ? as_list<double>(doc["snr_db"], "snr_db")
                                           : std::vector<double>{base.snr_db};
  const auto bits = doc.contains("bit_depth") ? bit_list(doc["bit_depth"])
                                              : std::vector<std::optional<int>>{base.bit_depth};
  for (int n : ns)
    for (int k : ks)
      for (const auto& b : bits)
        for (double snr : snrs) {
          ScenarioConfig s = base;
          s.n = n;
          s.k = k;
          s.bit_depth = b;
          s.snr_db = snr;
          try {
            validate(s);
          } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("invalid scenario: ") + e.what(), "");
          }
          exp.scenarios.push_back(s);
        }
  exp.source = doc.dump(2);
  return exp;
}

double scenario_crb_trace(const ScenarioConfig& cfg) {
  validate(cfg);
  const auto spec = scenario_quantizer(cfg);
  const int draws = cfg.trials;
  double acc = 0.0;
  int used = 0;
  for (int t = 0; t < draws; ++t) {
    std::mt19937_64 rng(trial_seed(cfg.seed, static_cast<std::uint64_t>(t)));
    const GroundTruth truth = draw_truth(cfg, rng);
    const CVector z = synthesize(truth, cfg.n);
    const double sigma2 = noise_variance_for(z, cfg.snr_db);
    const double tr = crb_trace_for(truth, spec ? &*spec : nullptr, cfg.n, sigma2);
    if (std::isfinite(tr)) {
      acc += tr;
      ++used;
    }
  }
  return used ? acc / used : kNaN;
}

}  // namespace valse
