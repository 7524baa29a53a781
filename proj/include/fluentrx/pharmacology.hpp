#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fluentrx/rng.hpp"

namespace fluentrx {

enum class Condition { depression = 0, anxiety = 1, insomnia = 2 };

inline constexpr std::array<Condition, 3> kAllConditions{
    Condition::depression, Condition::anxiety, Condition::insomnia};

const char* condition_name(Condition c);

// Inclusive whole-day interval.
struct DayRange {
  int min_days = 0;
  int max_days = 0;
};

// Fraction interval inside [0, 1]; a point estimate has low == high.
struct RateRange {
  double low = 0.0;
  double high = 0.0;
};

struct Medication {
  std::string name;
  DayRange onset;            // onset window from the catalog text
  RateRange response_rate;
  std::string conditions;    // free-text provenance column, not interpreted
  std::array<double, 3> effect_mean{};  // per Condition; positive lowers severity
  double effect_std = 0.0;
  double half_life_days = 7.0;
  int time_to_effect = 0;    // floor of the onset midpoint, in days

  // Throws std::invalid_argument naming the offending field.
  void require_valid() const;
};

// A medication administered on a given day. dosage stays strictly positive.
struct ActiveDose {
  Medication medication;
  int start_day = 0;
  double dosage = 1.0;
};

// Administration entry point: enforces the dosing bounds [0.5, 2.0] and a
// non-negative start day (std::domain_error), and validates the medication.
ActiveDose administer(const Medication& med, int start_day, double dosage);

// Remaining amount after exponential decay, dosage * 2^(-(day-start)/T).
// day counts whole days and must not precede the dose (std::domain_error).
double concentration(const ActiveDose& dose, int day);

// Zero until time_to_effect days have elapsed, then equals concentration.
double effective_concentration(const ActiveDose& dose, int day);

// Net improvement pressure on one condition, clamped to [-1, 1]. Each dose
// contributes effective_concentration * effect, the effect drawn once per
// (dose, day) from N(effect_mean, effect_std^2). Doses below the 1e-6
// concentration floor or that do not act on the condition contribute
// nothing and draw nothing; zero-spread effects contribute their mean
// deterministically.
double net_pressure(std::span<const ActiveDose> doses, Condition condition,
                    int day, RandomStream& rng);

// Blends every row of a row-stochastic matrix toward the adjacent state:
// one step down (toward row index - 1) when p > 0, one step up when p < 0,
// weighted by |p|. Boundary rows shift onto themselves. Preserves row
// stochasticity exactly at p == 0 and within rounding otherwise. Throws
// std::domain_error when |p| > 1 and std::invalid_argument for a
// non-stochastic input.
std::vector<std::vector<double>> apply_pressure(
    const std::vector<std::vector<double>>& transition, double p);

// Catalog text grammars. `line` only feeds error messages.
//
// Onset: "Within N days|weeks" -> [1, N*unit]; "First few days" -> [1, 3];
// otherwise the earliest "A-B days|weeks" range (or "N days|weeks" point)
// in the text, ranges winning at equal positions. Weeks scale by 7.
DayRange parse_onset(std::string_view text, int line = 0);

// Response rate: the earliest "A%-B%" range (the first % is optional, the
// second is required, which keeps dosage spans like "600 mg-1800mg" out),
// else the earliest "P%" point. Percent text converts to a fraction by
// shifting the decimal point textually, so "67.2%" parses to exactly the
// double closest to 0.672.
RateRange parse_response_rate(std::string_view text, int line = 0);

class MedicationCatalog {
 public:
  // Names must be unique; every entry is validated.
  explicit MedicationCatalog(std::vector<Medication> meds);

  std::size_t size() const { return meds_.size(); }
  const Medication& operator[](std::size_t i) const { return meds_.at(i); }
  const std::vector<Medication>& entries() const { return meds_; }
  const Medication* find(std::string_view name) const;

 private:
  std::vector<Medication> meds_;
};

// CSV with the exact header
// name,onset,response_rate,conditions,effect_depression,effect_anxiety,
// effect_insomnia,effect_std,half_life_days. Malformed input throws
// ParseError naming line and column; semantic violations and duplicate
// names surface as ParseError with the offending line.
MedicationCatalog parse_catalog(std::string_view csv_text);

// parse_catalog over the file contents; unreadable path throws ParseError
// naming the path.
MedicationCatalog load_catalog(const std::filesystem::path& path);

// Canonical text form: onset as "A-B days" (or "N days"), response rate as
// "A-B%" (or "P%") via the inverse textual shift, doubles in shortest
// round-trip form. parse_catalog(serialize_catalog(c)) reproduces every
// field of c exactly.
std::string serialize_catalog(const MedicationCatalog& catalog);

// FNV-1a 64 over the serialized canonical form.
std::uint64_t catalog_fingerprint(const MedicationCatalog& catalog);

}  // namespace fluentrx
