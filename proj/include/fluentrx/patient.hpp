#pragma once

#include <vector>

#include "json.hpp"

#include "fluentrx/hmm.hpp"
#include "fluentrx/pharmacology.hpp"
#include "fluentrx/rng.hpp"

namespace fluentrx {

// One simulated person. Severities run 1 (mild) to 5 (severe) per
// condition; baseline_fluency is the condition-independent component of
// speech fluency, in [0, 1]; day never decreases.
struct PatientState {
  int depression = 1;
  int anxiety = 1;
  int insomnia = 1;
  double baseline_fluency = 1.0;
  std::vector<ActiveDose> doses;
  int day = 0;

  int severity(Condition c) const;
  void set_severity(Condition c, int s);

  // Throws std::domain_error on an out-of-range severity, baseline, or day.
  void require_valid() const;
};

// The three condition chains. Identical parameterization by default.
struct ConditionHmms {
  GaussianHmm depression;
  GaussianHmm anxiety;
  GaussianHmm insomnia;

  static ConditionHmms severity_default();
  const GaussianHmm& of(Condition c) const;
};

// Weighted fluency in [0, 1]: each severity rescaled so 1 maps to 1.0 and
// 5 maps to 0.0, weighted 0.1 (depression), 0.2 (anxiety), 0.3 (insomnia),
// plus 0.4 * baseline_fluency.
double true_fluency(const PatientState& s);

// true_fluency plus N(0, noise_std^2), clamped back into [0, 1].
// noise_std == 0 returns the true score without consuming randomness.
double measure_fluency(const PatientState& s, double noise_std, RandomStream& rng);

// One day tick. Per condition, in depression/anxiety/insomnia order:
// compute the net medication pressure at the patient's current day, tilt
// that condition's transition row by it, and draw the next severity.
// Advances day by one; doses are left untouched.
PatientState advance_day(PatientState s, const ConditionHmms& hmms, RandomStream& rng);

// Trace record emitted by the simulation logs.
nlohmann::ordered_json patient_record(const PatientState& s, double measured_fluency);

}  // namespace fluentrx
