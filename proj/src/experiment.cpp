#include "fluentrx/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "fluentrx/bandit.hpp"
#include "fluentrx/csv.hpp"
#include "fluentrx/patient.hpp"
#include "fluentrx/rng.hpp"

namespace fluentrx {

const char* policy_name(PolicyKind p) {
  switch (p) {
    case PolicyKind::linucb: return "linucb";
    case PolicyKind::random: return "random";
    case PolicyKind::none: return "none";
  }
  return "?";
}

PolicyKind policy_from_name(std::string_view name) {
  if (name == "linucb") return PolicyKind::linucb;
  if (name == "random") return PolicyKind::random;
  if (name == "none") return PolicyKind::none;
  throw std::invalid_argument("unknown policy '" + std::string(name) +
                              "' (expected linucb, random, or none)");
}

const char* outcome_name(Outcome o) {
  switch (o) {
    case Outcome::success: return "success";
    case Outcome::failure: return "failure";
    case Outcome::neutral: return "neutral";
  }
  return "?";
}

const char* reward_mode_name(RewardMode m) {
  return m == RewardMode::measured ? "measured" : "true";
}

RewardMode reward_mode_from_name(std::string_view name) {
  if (name == "measured") return RewardMode::measured;
  if (name == "true") return RewardMode::true_fluency;
  throw std::invalid_argument("unknown reward mode '" + std::string(name) +
                              "' (expected measured or true)");
}

void ExperimentConfig::require_valid() const {
  if (n_runs < 1) throw std::invalid_argument("runs must be >= 1");
  if (horizon_days < 0) throw std::invalid_argument("horizon must be >= 0");
  if (decision_interval_days < 1) throw std::invalid_argument("decision interval must be >= 1");
  if (!(noise_std >= 0.0)) throw std::invalid_argument("noise_std must be >= 0");
  if (!(alpha >= 0.0)) throw std::invalid_argument("alpha must be >= 0");
  if (!(sigma_fluency > 0.0)) throw std::invalid_argument("sigma_fluency must be > 0");
  if (!(success_threshold_sigmas >= 0.0))
    throw std::invalid_argument("success threshold must be >= 0");
  if (!(baseline_fluency_min >= 0.0 && baseline_fluency_max <= 1.0 &&
        baseline_fluency_min <= baseline_fluency_max))
    throw std::invalid_argument("baseline fluency range must sit inside [0, 1]");
  if (!(dosage >= 0.5 && dosage <= 2.0))
    throw std::invalid_argument("dosage outside [0.5, 2.0]");
  if (threads < 0) throw std::invalid_argument("threads must be >= 0");
  if (hmm_override && hmm_override->n_states() != 5)
    throw std::invalid_argument("condition chain override must have 5 states");
}

nlohmann::ordered_json ExperimentConfig::to_json() const {
  nlohmann::ordered_json j;
  j["runs"] = n_runs;
  j["horizon_days"] = horizon_days;
  j["decision_interval_days"] = decision_interval_days;
  j["noise_std"] = noise_std;
  j["alpha"] = alpha;
  j["sigma_fluency"] = sigma_fluency;
  j["success_threshold_sigmas"] = success_threshold_sigmas;
  j["baseline_fluency_min"] = baseline_fluency_min;
  j["baseline_fluency_max"] = baseline_fluency_max;
  j["dosage"] = dosage;
  j["master_seed"] = master_seed;
  j["policy"] = policy_name(policy);
  j["reward_mode"] = reward_mode_name(reward_mode);
  // threads deliberately omitted: it changes scheduling, never results, and
  // the summary must be byte-identical across thread counts.
  if (hmm_override) j["hmm"] = hmm_override->to_json();
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j, ExperimentConfig base) {
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  ExperimentConfig cfg = std::move(base);
  try {
    for (const auto& item : j.items()) {
      const std::string& k = item.key();
      const auto& v = item.value();
      if (k == "runs") cfg.n_runs = v.get<int>();
      else if (k == "horizon_days") cfg.horizon_days = v.get<int>();
      else if (k == "decision_interval_days") cfg.decision_interval_days = v.get<int>();
      else if (k == "noise_std") cfg.noise_std = v.get<double>();
      else if (k == "alpha") cfg.alpha = v.get<double>();
      else if (k == "sigma_fluency") cfg.sigma_fluency = v.get<double>();
      else if (k == "success_threshold_sigmas") cfg.success_threshold_sigmas = v.get<double>();
      else if (k == "baseline_fluency_min") cfg.baseline_fluency_min = v.get<double>();
      else if (k == "baseline_fluency_max") cfg.baseline_fluency_max = v.get<double>();
      else if (k == "dosage") cfg.dosage = v.get<double>();
      else if (k == "master_seed") cfg.master_seed = v.get<std::uint64_t>();
      else if (k == "policy") cfg.policy = policy_from_name(v.get<std::string>());
      else if (k == "reward_mode") cfg.reward_mode = reward_mode_from_name(v.get<std::string>());
      else if (k == "threads") cfg.threads = v.get<int>();
      else if (k == "hmm") cfg.hmm_override = GaussianHmm::from_json(v);
      else throw std::invalid_argument("unknown config key '" + k + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed config: ") + e.what());
  }
  cfg.require_valid();
  return cfg;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  return from_json(j, ExperimentConfig{});
}

Outcome classify(double initial_measured, double terminal_measured, double sigma_fluency,
                 double threshold_sigmas) {
  if (!(sigma_fluency > 0.0)) throw std::invalid_argument("sigma_fluency must be > 0");
  if (!(threshold_sigmas >= 0.0)) throw std::invalid_argument("threshold must be >= 0");
  const double delta = terminal_measured - initial_measured;
  const double threshold = threshold_sigmas * sigma_fluency;
  if (delta > threshold) return Outcome::success;
  if (delta < -threshold) return Outcome::failure;
  return Outcome::neutral;  // boundary values land here
}

TrialTrace run_trial(const ExperimentConfig& cfg, const MedicationCatalog& catalog,
                     int run_index) {
  cfg.require_valid();
  if (run_index < 0) throw std::invalid_argument("run index must be >= 0");
  if (catalog.size() == 0) throw std::invalid_argument("catalog has no medications");

  RandomStream rng =
      RandomStream::derive(cfg.master_seed, static_cast<std::uint64_t>(run_index));
  const ConditionHmms hmms =
      cfg.hmm_override
          ? ConditionHmms{*cfg.hmm_override, *cfg.hmm_override, *cfg.hmm_override}
          : ConditionHmms::severity_default();

  PatientState patient;
  patient.depression = hmms.depression.sample_initial(rng);
  patient.anxiety = hmms.anxiety.sample_initial(rng);
  patient.insomnia = hmms.insomnia.sample_initial(rng);
  patient.baseline_fluency = rng.uniform(cfg.baseline_fluency_min, cfg.baseline_fluency_max);

  std::optional<LinUcbPolicy> policy;
  if (cfg.policy == PolicyKind::linucb) {
    std::vector<std::string> names;
    names.reserve(catalog.size());
    for (const auto& m : catalog.entries()) names.push_back(m.name);
    policy.emplace(std::move(names), 5, cfg.alpha);
  }

  TrialTrace trace;
  trace.run_index = run_index;
  trace.days.reserve(static_cast<std::size_t>(cfg.horizon_days) + 1);

  double measured = measure_fluency(patient, cfg.noise_std, rng);
  trace.days.push_back(DayRecord{0, patient.depression, patient.anxiety, patient.insomnia,
                                 true_fluency(patient), measured, "", std::nullopt});
  double epoch_reference =
      cfg.reward_mode == RewardMode::measured ? measured : true_fluency(patient);

  // The arm picked at the previous epoch; it owns the interval that ends at
  // the next epoch and is credited then. The first interval runs before any
  // dose exists, so its delta updates nothing.
  int pending_arm = -1;
  Eigen::VectorXd pending_context;

  for (int day = 1; day <= cfg.horizon_days; ++day) {
    patient = advance_day(patient, hmms, rng);
    measured = measure_fluency(patient, cfg.noise_std, rng);
    DayRecord rec{day,      patient.depression,     patient.anxiety, patient.insomnia,
                  true_fluency(patient), measured,  "",              std::nullopt};
    if (day % cfg.decision_interval_days == 0) {
      const double value =
          cfg.reward_mode == RewardMode::measured ? measured : true_fluency(patient);
      const double reward = value - epoch_reference;
      rec.reward = reward;

      // Context is observed under every policy so trajectories stay
      // comparable; only how the arm is chosen differs.
      const double e_dep = hmms.depression.emit(patient.depression, rng);
      const double e_anx = hmms.anxiety.emit(patient.anxiety, rng);
      const double e_ins = hmms.insomnia.emit(patient.insomnia, rng);
      const Eigen::VectorXd x = build_context(e_dep, e_anx, e_ins, measured);

      int arm = -1;
      if (cfg.policy == PolicyKind::linucb) {
        arm = policy->select(x);
      } else if (cfg.policy == PolicyKind::random) {
        auto pick = static_cast<std::size_t>(rng.uniform01() *
                                             static_cast<double>(catalog.size()));
        if (pick >= catalog.size()) pick = catalog.size() - 1;
        arm = static_cast<int>(pick);
      }
      if (arm >= 0) {
        patient.doses.push_back(
            administer(catalog[static_cast<std::size_t>(arm)], day, cfg.dosage));
        ++trace.doses_administered;
        rec.medication = catalog[static_cast<std::size_t>(arm)].name;
      }
      if (policy && pending_arm >= 0) policy->update(pending_arm, pending_context, reward);
      if (cfg.policy == PolicyKind::linucb) {
        pending_arm = arm;
        pending_context = x;
      }
      epoch_reference = value;
    }
    trace.days.push_back(std::move(rec));
  }

  trace.initial_measured = trace.days.front().measured_fluency;
  trace.terminal_measured = trace.days.back().measured_fluency;
  trace.initial_true = trace.days.front().true_fluency;
  trace.terminal_true = trace.days.back().true_fluency;
  return trace;
}

ExperimentSummary summarize(const std::vector<RunRecord>& runs) {
  if (runs.empty()) throw std::invalid_argument("no runs to summarize");
  ExperimentSummary s;
  s.n_runs = static_cast<int>(runs.size());
  s.classifications.reserve(runs.size());
  double sum = 0.0;
  int successes = 0, failures = 0;
  for (const auto& r : runs) {
    sum += r.terminal_measured;
    switch (r.outcome) {
      case Outcome::success: ++successes; s.classifications += 'S'; break;
      case Outcome::failure: ++failures; s.classifications += 'F'; break;
      case Outcome::neutral: s.classifications += 'N'; break;
    }
  }
  const double n = static_cast<double>(runs.size());
  s.success_rate = successes / n;
  s.failure_rate = failures / n;
  s.neutral_rate = (n - successes - failures) / n;
  s.mean_terminal_fluency = sum / n;
  double acc = 0.0;
  for (const auto& r : runs) {
    const double d = r.terminal_measured - s.mean_terminal_fluency;
    acc += d * d;
  }
  s.std_terminal_fluency = runs.size() > 1 ? std::sqrt(acc / (n - 1.0)) : 0.0;
  return s;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const MedicationCatalog& catalog,
                                const std::function<void(const TrialTrace&)>& on_trace) {
  cfg.require_valid();
  if (catalog.size() == 0) throw std::invalid_argument("catalog has no medications");

  std::vector<RunRecord> runs(static_cast<std::size_t>(cfg.n_runs));
  std::atomic<int> next{0};
  std::mutex sink_mutex;
  std::mutex error_mutex;
  std::exception_ptr first_error;

  auto worker = [&]() {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= cfg.n_runs) return;
      try {
        const TrialTrace trace = run_trial(cfg, catalog, i);
        RunRecord rec;
        rec.run_index = i;
        rec.initial_measured = trace.initial_measured;
        rec.terminal_measured = trace.terminal_measured;
        rec.initial_true = trace.initial_true;
        rec.terminal_true = trace.terminal_true;
        rec.outcome = classify(trace.initial_measured, trace.terminal_measured,
                               cfg.sigma_fluency, cfg.success_threshold_sigmas);
        rec.doses_administered = trace.doses_administered;
        runs[static_cast<std::size_t>(i)] = rec;
        if (on_trace) {
          const std::scoped_lock lock(sink_mutex);
          on_trace(trace);
        }
      } catch (...) {
        const std::scoped_lock lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  int n_threads = cfg.threads == 0
                      ? static_cast<int>(std::max(1u, std::thread::hardware_concurrency()))
                      : cfg.threads;
  n_threads = std::min(n_threads, cfg.n_runs);
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  ExperimentResult result;
  result.runs = std::move(runs);
  result.summary = summarize(result.runs);
  return result;
}

std::string runs_to_csv(const std::vector<RunRecord>& runs) {
  std::ostringstream out;
  out << "run_index,initial_measured,terminal_measured,initial_true,terminal_true,"
         "classification,doses_administered\n";
  for (const auto& r : runs)
    out << r.run_index << ',' << format_double(r.initial_measured) << ','
        << format_double(r.terminal_measured) << ',' << format_double(r.initial_true) << ','
        << format_double(r.terminal_true) << ',' << outcome_name(r.outcome) << ','
        << r.doses_administered << '\n';
  return out.str();
}

std::string trace_to_csv(const TrialTrace& trace) {
  std::ostringstream out;
  out << "day,depression,anxiety,insomnia,true_fluency,measured_fluency,medication,reward\n";
  for (const auto& d : trace.days) {
    out << d.day << ',' << d.depression << ',' << d.anxiety << ',' << d.insomnia << ','
        << format_double(d.true_fluency) << ',' << format_double(d.measured_fluency) << ','
        << csv_quote(d.medication) << ',';
    if (d.reward) out << format_double(*d.reward);
    out << '\n';
  }
  return out.str();
}

nlohmann::ordered_json summary_to_json(const ExperimentConfig& cfg,
                                       const MedicationCatalog& catalog,
                                       const ExperimentSummary& summary) {
  char fp[32];
  std::snprintf(fp, sizeof fp, "fnv1a64:%016llx",
                static_cast<unsigned long long>(catalog_fingerprint(catalog)));
  nlohmann::ordered_json j;
  j["config"] = cfg.to_json();
  j["catalog"] = {{"medications", catalog.size()}, {"fingerprint", fp}};
  j["results"] = {{"n_runs", summary.n_runs},
                  {"success_rate", summary.success_rate},
                  {"failure_rate", summary.failure_rate},
                  {"neutral_rate", summary.neutral_rate},
                  {"mean_terminal_fluency", summary.mean_terminal_fluency},
                  {"std_terminal_fluency", summary.std_terminal_fluency},
                  {"classifications", summary.classifications}};
  return j;
}

}  // namespace fluentrx
