#include "fluentrx/patient.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace fluentrx {

namespace {

// Severity 1 -> 1.0, severity 5 -> 0.0.
double wellness(int severity) { return (5.0 - severity) / 4.0; }

void check_severity(int s, Condition c) {
  if (s < 1 || s > 5)
    throw std::domain_error(std::string(condition_name(c)) + " severity " +
                            std::to_string(s) + " outside 1..5");
}

}  // namespace

int PatientState::severity(Condition c) const {
  switch (c) {
    case Condition::depression: return depression;
    case Condition::anxiety: return anxiety;
    case Condition::insomnia: return insomnia;
  }
  throw std::domain_error("unknown condition");
}

void PatientState::set_severity(Condition c, int s) {
  check_severity(s, c);
  switch (c) {
    case Condition::depression: depression = s; return;
    case Condition::anxiety: anxiety = s; return;
    case Condition::insomnia: insomnia = s; return;
  }
  throw std::domain_error("unknown condition");
}

void PatientState::require_valid() const {
  for (Condition c : kAllConditions) check_severity(severity(c), c);
  if (!(baseline_fluency >= 0.0 && baseline_fluency <= 1.0))
    throw std::domain_error("baseline fluency outside [0, 1]");
  if (day < 0) throw std::domain_error("negative day");
  for (const auto& d : doses) {
    if (!(d.dosage > 0.0)) throw std::domain_error("dose with non-positive dosage");
    if (d.start_day < 0 || d.start_day > day)
      throw std::domain_error("dose start day outside the patient's lifetime");
  }
}

ConditionHmms ConditionHmms::severity_default() {
  return ConditionHmms{GaussianHmm::severity_default(), GaussianHmm::severity_default(),
                       GaussianHmm::severity_default()};
}

const GaussianHmm& ConditionHmms::of(Condition c) const {
  switch (c) {
    case Condition::depression: return depression;
    case Condition::anxiety: return anxiety;
    case Condition::insomnia: return insomnia;
  }
  throw std::domain_error("unknown condition");
}

double true_fluency(const PatientState& s) {
  s.require_valid();
  return 0.1 * wellness(s.depression) + 0.2 * wellness(s.anxiety) +
         0.3 * wellness(s.insomnia) + 0.4 * s.baseline_fluency;
}

double measure_fluency(const PatientState& s, double noise_std, RandomStream& rng) {
  if (!(noise_std >= 0.0)) throw std::domain_error("noise_std must be >= 0");
  const double truth = true_fluency(s);
  if (noise_std == 0.0) return truth;  // no draw: noiseless readings are bit-stable
  return std::clamp(truth + rng.normal(0.0, noise_std), 0.0, 1.0);
}

PatientState advance_day(PatientState s, const ConditionHmms& hmms, RandomStream& rng) {
  s.require_valid();
  for (Condition c : kAllConditions) {
    const GaussianHmm& chain = hmms.of(c);
    if (chain.n_states() != 5)
      throw std::invalid_argument("condition chains must have 5 states");
    const double p = net_pressure(s.doses, c, s.day, rng);
    const auto tilted = apply_pressure(chain.transition(), p);
    const auto& row = tilted[static_cast<std::size_t>(s.severity(c) - 1)];
    s.set_severity(c, static_cast<int>(rng.categorical(row)) + 1);
  }
  s.day += 1;
  return s;
}

nlohmann::ordered_json patient_record(const PatientState& s, double measured_fluency) {
  nlohmann::ordered_json j;
  j["day"] = s.day;
  j["severities"] = {{"depression", s.depression},
                     {"anxiety", s.anxiety},
                     {"insomnia", s.insomnia}};
  j["baseline"] = s.baseline_fluency;
  j["true_fluency"] = true_fluency(s);
  j["measured_fluency"] = measured_fluency;
  return j;
}

}  // namespace fluentrx
