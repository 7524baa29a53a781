#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "fluentrx/hmm.hpp"
#include "fluentrx/pharmacology.hpp"

namespace fluentrx {

enum class PolicyKind { linucb, random, none };
const char* policy_name(PolicyKind p);
PolicyKind policy_from_name(std::string_view name);  // std::invalid_argument

enum class Outcome { success, failure, neutral };
const char* outcome_name(Outcome o);

// What the policy's reward is computed from. Classification always uses
// measured fluency; this toggle only changes the learning signal.
enum class RewardMode { measured, true_fluency };
const char* reward_mode_name(RewardMode m);
RewardMode reward_mode_from_name(std::string_view name);  // std::invalid_argument

struct ExperimentConfig {
  int n_runs = 500;
  int horizon_days = 365;
  int decision_interval_days = 7;
  double noise_std = 0.025;
  double alpha = 10.0;
  double sigma_fluency = 0.1;            // classification scale
  double success_threshold_sigmas = 0.5;
  double baseline_fluency_min = 0.3;
  double baseline_fluency_max = 0.9;
  double dosage = 1.0;                   // per administration, within [0.5, 2.0]
  std::uint64_t master_seed = 42;
  PolicyKind policy = PolicyKind::linucb;
  RewardMode reward_mode = RewardMode::measured;
  int threads = 1;  // 0 picks the hardware count; execution detail, not echoed to JSON
  std::optional<GaussianHmm> hmm_override;  // replaces all three chains; must have 5 states

  void require_valid() const;  // std::invalid_argument
  nlohmann::ordered_json to_json() const;
  // Starts from `base` and overrides only the keys present. Unknown keys
  // throw std::invalid_argument.
  static ExperimentConfig from_json(const nlohmann::json& j, ExperimentConfig base);
  static ExperimentConfig from_json(const nlohmann::json& j);
};

struct DayRecord {
  int day = 0;
  int depression = 0;
  int anxiety = 0;
  int insomnia = 0;
  double true_fluency = 0.0;
  double measured_fluency = 0.0;
  std::string medication;        // empty outside decision days
  std::optional<double> reward;  // change since the previous decision epoch
};

struct TrialTrace {
  int run_index = 0;
  std::vector<DayRecord> days;  // horizon_days + 1 records
  int doses_administered = 0;
  double initial_measured = 0.0;
  double terminal_measured = 0.0;
  double initial_true = 0.0;
  double terminal_true = 0.0;
};

// One patient trajectory under the configured policy. Day 0 is baseline
// only: sample severities and baseline fluency, measure. Every later day
// advances the chains and measures; on decision days (multiples of
// decision_interval_days) the harness observes emissions, picks an arm per
// the policy, administers one dose, and hands the fluency change over the
// interval that just ended to the previous decision's arm (the first
// interval, measured against the day-0 baseline, has no arm to credit).
TrialTrace run_trial(const ExperimentConfig& cfg, const MedicationCatalog& catalog,
                     int run_index);

// Success when terminal - initial exceeds threshold_sigmas * sigma_fluency,
// failure when it falls below the negative of that; boundary values
// (including a zero threshold crossing) count as neutral.
Outcome classify(double initial_measured, double terminal_measured,
                 double sigma_fluency, double threshold_sigmas);

struct RunRecord {
  int run_index = 0;
  double initial_measured = 0.0;
  double terminal_measured = 0.0;
  double initial_true = 0.0;
  double terminal_true = 0.0;
  Outcome outcome = Outcome::neutral;
  int doses_administered = 0;
};

struct ExperimentSummary {
  int n_runs = 0;
  double success_rate = 0.0;
  double failure_rate = 0.0;
  double neutral_rate = 0.0;
  double mean_terminal_fluency = 0.0;  // measured
  double std_terminal_fluency = 0.0;   // sample std, 0 for a single run
  std::string classifications;         // one of S/F/N per run, in run order
};

ExperimentSummary summarize(const std::vector<RunRecord>& runs);

// Runs every trial on cfg.threads workers. Each trial draws from its own
// (master_seed, run_index) stream and lands in its run slot, so results
// are identical no matter the thread count or scheduling. on_trace, when
// set, receives each finished trace exactly once (calls are serialized but
// arrive in completion order).
struct ExperimentResult {
  std::vector<RunRecord> runs;
  ExperimentSummary summary;
};

ExperimentResult run_experiment(const ExperimentConfig& cfg, const MedicationCatalog& catalog,
                                const std::function<void(const TrialTrace&)>& on_trace = {});

// run_index,initial_measured,terminal_measured,initial_true,terminal_true,
// classification,doses_administered
std::string runs_to_csv(const std::vector<RunRecord>& runs);

// day,depression,anxiety,insomnia,true_fluency,measured_fluency,medication,reward
std::string trace_to_csv(const TrialTrace& trace);

// Deterministic report (no timestamps): config echo, catalog fingerprint,
// aggregate rates. Serializing twice from the same inputs is byte-equal.
nlohmann::ordered_json summary_to_json(const ExperimentConfig& cfg,
                                       const MedicationCatalog& catalog,
                                       const ExperimentSummary& summary);

}  // namespace fluentrx
