#include "fluentrx/pharmacology.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>
#include <stdexcept>

#include "fluentrx/csv.hpp"
#include "fluentrx/errors.hpp"

namespace fluentrx {

namespace {

constexpr double kIgnorableConcentration = 1e-6;

constexpr std::array<std::string_view, 9> kCatalogHeader = {
    "name",          "onset",          "response_rate",
    "conditions",    "effect_depression", "effect_anxiety",
    "effect_insomnia", "effect_std",   "half_life_days"};

// "67.2" (a percentage) -> "0.672": the decimal point moves two digits left
// textually, so the only rounding is the final string-to-double conversion.
std::string shift_percent_to_fraction(std::string_view number) {
  const auto dot = number.find('.');
  const std::string intpart(dot == std::string_view::npos ? number : number.substr(0, dot));
  const std::string frac(dot == std::string_view::npos ? std::string_view{}
                                                       : number.substr(dot + 1));
  const std::string digits = intpart + frac;
  const int point = static_cast<int>(intpart.size()) - 2;
  if (point > 0) {
    std::string out = digits;
    out.insert(static_cast<std::size_t>(point), ".");
    return out;
  }
  return "0." + std::string(static_cast<std::size_t>(-point), '0') + digits;
}

// Inverse of the above: a fraction's shortest decimal form -> percent text.
// Round-tripping through shift_percent_to_fraction recovers the exact bits.
std::string shift_fraction_to_percent(double fraction) {
  std::string s = format_double(fraction);
  if (s.find('e') != std::string::npos || s.find('E') != std::string::npos) {
    // Shortest form went scientific (only possible for extreme magnitudes);
    // fall back to a long fixed form, still exact on re-parse.
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(20);
    os << fraction;
    s = os.str();
  }
  const auto dot = s.find('.');
  std::string intpart = dot == std::string::npos ? s : s.substr(0, dot);
  std::string frac = dot == std::string::npos ? "" : s.substr(dot + 1);
  while (frac.size() < 2) frac += '0';
  std::string digits = intpart + frac;
  std::size_t point = intpart.size() + 2;
  std::string out = digits.substr(0, point);
  if (point < digits.size()) out += "." + digits.substr(point);
  while (out.size() > 1 && out[0] == '0' && out[1] != '.') out.erase(out.begin());
  while (out.find('.') != std::string::npos && (out.back() == '0' || out.back() == '.')) {
    const bool stop = out.back() == '.';
    out.pop_back();
    if (stop) break;
  }
  return out;
}

double strict_double(const std::string& text, int line) {
  try {
    return parse_csv_double(text, line, 0);
  } catch (const ParseError&) {
    throw ParseError("line " + std::to_string(line) + ": bad number '" + text + "'", line);
  }
}

int unit_days(const std::string& unit) {
  return std::tolower(static_cast<unsigned char>(unit[0])) == 'w' ? 7 : 1;
}

}  // namespace

const char* condition_name(Condition c) {
  switch (c) {
    case Condition::depression: return "depression";
    case Condition::anxiety: return "anxiety";
    case Condition::insomnia: return "insomnia";
  }
  return "?";
}

void Medication::require_valid() const {
  if (name.empty()) throw std::invalid_argument("medication has an empty name");
  const std::string who = "medication '" + name + "': ";
  if (onset.min_days < 0 || onset.max_days < onset.min_days)
    throw std::invalid_argument(who + "onset window is out of order");
  if (!(response_rate.low >= 0.0) || !(response_rate.high <= 1.0) ||
      response_rate.low > response_rate.high)
    throw std::invalid_argument(who + "response rate outside [0, 1] or out of order");
  for (Condition c : kAllConditions) {
    const double e = effect_mean[static_cast<int>(c)];
    if (!(e >= 0.0 && e <= 1.0))
      throw std::invalid_argument(who + std::string("effect on ") + condition_name(c) +
                                  " outside [0, 1]");
  }
  if (!(effect_std >= 0.0)) throw std::invalid_argument(who + "effect_std is negative");
  if (!(half_life_days > 0.0)) throw std::invalid_argument(who + "half-life must be positive");
  if (time_to_effect < 0) throw std::invalid_argument(who + "time_to_effect is negative");
}

ActiveDose administer(const Medication& med, int start_day, double dosage) {
  med.require_valid();
  if (start_day < 0) throw std::domain_error("dose start day is negative");
  if (!(dosage >= 0.5 && dosage <= 2.0))
    throw std::domain_error("dosage " + format_double(dosage) + " outside [0.5, 2.0]");
  return ActiveDose{med, start_day, dosage};
}

double concentration(const ActiveDose& dose, int day) {
  if (!(dose.dosage > 0.0)) throw std::domain_error("dose has non-positive dosage");
  if (!(dose.medication.half_life_days > 0.0))
    throw std::domain_error("dose has non-positive half-life");
  if (day < dose.start_day)
    throw std::domain_error("concentration queried at day " + std::to_string(day) +
                            ", before the dose at day " + std::to_string(dose.start_day));
  const double elapsed = static_cast<double>(day - dose.start_day);
  return dose.dosage * std::exp2(-elapsed / dose.medication.half_life_days);
}

double effective_concentration(const ActiveDose& dose, int day) {
  if (day < dose.start_day)
    throw std::domain_error("effective_concentration queried before the dose");
  if (day - dose.start_day < dose.medication.time_to_effect) return 0.0;
  return concentration(dose, day);
}

double net_pressure(std::span<const ActiveDose> doses, Condition condition, int day,
                    RandomStream& rng) {
  const int ci = static_cast<int>(condition);
  double total = 0.0;
  for (const auto& dose : doses) {
    const double conc = effective_concentration(dose, day);
    if (conc < kIgnorableConcentration) continue;  // no draw for a spent dose
    const double mean = dose.medication.effect_mean[ci];
    if (mean == 0.0) continue;  // does not act on this condition
    const double sd = dose.medication.effect_std;
    const double effect = sd == 0.0 ? mean : rng.normal(mean, sd);
    total += conc * effect;
  }
  return std::clamp(total, -1.0, 1.0);
}

std::vector<std::vector<double>> apply_pressure(
    const std::vector<std::vector<double>>& transition, double p) {
  const std::size_t n = transition.size();
  if (n == 0) throw std::invalid_argument("apply_pressure: empty matrix");
  for (std::size_t i = 0; i < n; ++i) {
    if (transition[i].size() != n)
      throw std::invalid_argument("apply_pressure: row " + std::to_string(i + 1) +
                                  " is not length " + std::to_string(n));
    double sum = 0.0;
    for (double v : transition[i]) {
      if (!(v >= 0.0))
        throw std::invalid_argument("apply_pressure: negative entry in row " +
                                    std::to_string(i + 1));
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw std::invalid_argument("apply_pressure: row " + std::to_string(i + 1) +
                                  " sums to " + format_double(sum));
  }
  if (!(p >= -1.0 && p <= 1.0))
    throw std::domain_error("apply_pressure: pressure outside [-1, 1]");

  if (p == 0.0) return transition;
  const double w = std::abs(p);
  auto out = transition;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t target = i;
    if (p > 0.0 && i > 0) target = i - 1;          // improvement: toward lower severity
    if (p < 0.0 && i + 1 < n) target = i + 1;      // deterioration: toward higher
    for (std::size_t j = 0; j < n; ++j)
      out[i][j] = (1.0 - w) * transition[i][j] + (j == target ? w : 0.0);
  }
  return out;
}

DayRange parse_onset(std::string_view text, int line) {
  static const std::regex within_re(R"(within\s+(\d+)\s+(day|week)s?)", std::regex::icase);
  static const std::regex few_re(R"(first\s+few\s+days)", std::regex::icase);
  static const std::regex span_re(
      R"((\d+)\s*-\s*(\d+)\s+(day|week)s?|(\d+)\s+(day|week)s?)", std::regex::icase);
  const std::string s(text);
  std::smatch m;
  if (std::regex_search(s, m, within_re)) {
    const int n = std::stoi(m[1].str());
    return DayRange{1, n * unit_days(m[2].str())};
  }
  if (std::regex_search(s, m, few_re)) return DayRange{1, 3};
  if (std::regex_search(s, m, span_re)) {
    DayRange r;
    if (m[1].matched) {
      const int u = unit_days(m[3].str());
      r = DayRange{std::stoi(m[1].str()) * u, std::stoi(m[2].str()) * u};
    } else {
      const int u = unit_days(m[5].str());
      const int n = std::stoi(m[4].str()) * u;
      r = DayRange{n, n};
    }
    if (r.min_days < 1 || r.max_days < r.min_days)
      throw ParseError("line " + std::to_string(line) + ": onset window '" + s +
                           "' is out of order",
                       line);
    return r;
  }
  throw ParseError("line " + std::to_string(line) + ": unrecognized onset text '" + s + "'",
                   line);
}

RateRange parse_response_rate(std::string_view text, int line) {
  static const std::regex range_re(R"((\d+(?:\.\d+)?)\s*%?\s*-\s*(\d+(?:\.\d+)?)\s*%)");
  static const std::regex point_re(R"((\d+(?:\.\d+)?)\s*%)");
  const std::string s(text);
  std::smatch m;
  RateRange r;
  if (std::regex_search(s, m, range_re)) {
    r.low = strict_double(shift_percent_to_fraction(m[1].str()), line);
    r.high = strict_double(shift_percent_to_fraction(m[2].str()), line);
  } else if (std::regex_search(s, m, point_re)) {
    r.low = r.high = strict_double(shift_percent_to_fraction(m[1].str()), line);
  } else {
    throw ParseError("line " + std::to_string(line) + ": no response rate in '" + s + "'",
                     line);
  }
  if (!(r.low >= 0.0 && r.high <= 1.0 && r.low <= r.high))
    throw ParseError("line " + std::to_string(line) + ": response rate '" + s +
                         "' outside 0-100% or out of order",
                     line);
  return r;
}

MedicationCatalog::MedicationCatalog(std::vector<Medication> meds) : meds_(std::move(meds)) {
  std::set<std::string_view> names;
  for (const auto& m : meds_) {
    m.require_valid();
    if (!names.insert(m.name).second)
      throw std::invalid_argument("duplicate medication '" + m.name + "'");
  }
}

const Medication* MedicationCatalog::find(std::string_view name) const {
  for (const auto& m : meds_)
    if (m.name == name) return &m;
  return nullptr;
}

MedicationCatalog parse_catalog(std::string_view csv_text) {
  CsvReader reader(csv_text);
  const auto header = reader.next_row();
  if (!header) throw ParseError("catalog is empty", 1);
  if (header->size() != kCatalogHeader.size())
    throw ParseError("line 1: catalog header has " + std::to_string(header->size()) +
                         " columns, expected " + std::to_string(kCatalogHeader.size()),
                     1);
  for (std::size_t i = 0; i < kCatalogHeader.size(); ++i) {
    if ((*header)[i] != kCatalogHeader[i])
      throw ParseError("line 1, column " + std::to_string(i + 1) + ": header '" +
                           (*header)[i] + "', expected '" + std::string(kCatalogHeader[i]) +
                           "'",
                       1, static_cast<int>(i + 1));
  }

  std::vector<Medication> meds;
  std::set<std::string> names;
  while (auto row = reader.next_row()) {
    const int line = reader.row_line();
    const bool blank =
        std::all_of(row->begin(), row->end(), [](const std::string& f) { return f.empty(); });
    if (blank) continue;
    if (row->size() != kCatalogHeader.size())
      throw ParseError("line " + std::to_string(line) + ": expected " +
                           std::to_string(kCatalogHeader.size()) + " fields, got " +
                           std::to_string(row->size()),
                       line);
    Medication med;
    med.name = (*row)[0];
    if (med.name.empty())
      throw ParseError("line " + std::to_string(line) + ": empty medication name", line, 1);
    if (!names.insert(med.name).second)
      throw ParseError("line " + std::to_string(line) + ": duplicate medication '" +
                           med.name + "'",
                       line, 1);
    med.onset = parse_onset((*row)[1], line);
    med.response_rate = parse_response_rate((*row)[2], line);
    med.conditions = (*row)[3];
    med.effect_mean[0] = parse_csv_double((*row)[4], line, 5);
    med.effect_mean[1] = parse_csv_double((*row)[5], line, 6);
    med.effect_mean[2] = parse_csv_double((*row)[6], line, 7);
    med.effect_std = parse_csv_double((*row)[7], line, 8);
    med.half_life_days = parse_csv_double((*row)[8], line, 9);
    med.time_to_effect = (med.onset.min_days + med.onset.max_days) / 2;
    try {
      med.require_valid();
    } catch (const std::invalid_argument& e) {
      throw ParseError("line " + std::to_string(line) + ": " + e.what(), line);
    }
    meds.push_back(std::move(med));
  }
  if (meds.empty()) throw ParseError("catalog has no data rows", 1);
  return MedicationCatalog(std::move(meds));
}

MedicationCatalog load_catalog(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open catalog file: " + path.string(), 0);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_catalog(buf.str());
}

std::string serialize_catalog(const MedicationCatalog& catalog) {
  std::ostringstream out;
  for (std::size_t i = 0; i < kCatalogHeader.size(); ++i) {
    if (i) out << ',';
    out << kCatalogHeader[i];
  }
  out << '\n';
  for (const auto& m : catalog.entries()) {
    out << csv_quote(m.name) << ',';
    if (m.onset.min_days == m.onset.max_days)
      out << m.onset.min_days << " days,";
    else
      out << m.onset.min_days << '-' << m.onset.max_days << " days,";
    if (m.response_rate.low == m.response_rate.high)
      out << shift_fraction_to_percent(m.response_rate.low) << "%,";
    else
      out << shift_fraction_to_percent(m.response_rate.low) << '-'
          << shift_fraction_to_percent(m.response_rate.high) << "%,";
    out << csv_quote(m.conditions) << ',' << format_double(m.effect_mean[0]) << ','
        << format_double(m.effect_mean[1]) << ',' << format_double(m.effect_mean[2]) << ','
        << format_double(m.effect_std) << ',' << format_double(m.half_life_days) << '\n';
  }
  return out.str();
}

std::uint64_t catalog_fingerprint(const MedicationCatalog& catalog) {
  const std::string bytes = serialize_catalog(catalog);
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace fluentrx
