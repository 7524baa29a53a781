#include "fluentrx/hmm.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace fluentrx {

namespace {

constexpr double kRowSumTolerance = 1e-9;

void require_clean(const std::vector<double>& initial,
                   const std::vector<std::vector<double>>& transition,
                   const std::vector<double>& emission_mean,
                   const std::vector<double>& emission_var) {
  const auto violations = GaussianHmm::check(initial, transition, emission_mean, emission_var);
  if (violations.empty()) return;
  std::ostringstream msg;
  msg << "invalid chain parameters: ";
  for (std::size_t i = 0; i < violations.size(); ++i) {
    if (i) msg << "; ";
    msg << violations[i];
  }
  throw std::invalid_argument(msg.str());
}

}  // namespace

GaussianHmm::GaussianHmm(std::vector<double> initial,
                         std::vector<std::vector<double>> transition,
                         std::vector<double> emission_mean,
                         std::vector<double> emission_var)
    : initial_(std::move(initial)),
      transition_(std::move(transition)),
      emission_mean_(std::move(emission_mean)),
      emission_var_(std::move(emission_var)) {
  require_clean(initial_, transition_, emission_mean_, emission_var_);
}

GaussianHmm GaussianHmm::severity_default() {
  const int n = 5;
  std::vector<double> initial(n, 0.2);
  std::vector<std::vector<double>> t(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i) {
    if (i == 0) {
      t[i][0] = 0.95;
      t[i][1] = 0.05;
    } else if (i == n - 1) {
      t[i][n - 1] = 0.95;
      t[i][n - 2] = 0.05;
    } else {
      t[i][i - 1] = 0.05;
      t[i][i] = 0.90;
      t[i][i + 1] = 0.05;
    }
  }
  std::vector<double> mean{0.8, 0.7, 0.6, 0.5, 0.4};
  std::vector<double> var(n, 0.0025);
  return GaussianHmm(std::move(initial), std::move(t), std::move(mean), std::move(var));
}

std::vector<std::string> GaussianHmm::check(
    const std::vector<double>& initial,
    const std::vector<std::vector<double>>& transition,
    const std::vector<double>& emission_mean,
    const std::vector<double>& emission_var) {
  std::vector<std::string> out;
  const std::size_t n = initial.size();
  if (n == 0) {
    out.push_back("initial distribution is empty");
    return out;
  }
  double isum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(initial[i] >= 0.0))
      out.push_back("initial probability for state " + std::to_string(i + 1) +
                    " is negative or not a number");
    isum += initial[i];
  }
  if (!(std::abs(isum - 1.0) <= kRowSumTolerance))
    out.push_back("initial distribution sums to " + std::to_string(isum));

  if (transition.size() != n) {
    out.push_back("transition matrix has " + std::to_string(transition.size()) +
                  " rows for " + std::to_string(n) + " states");
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const auto& row = transition[i];
      if (row.size() != n) {
        out.push_back("transition row " + std::to_string(i + 1) + " has " +
                      std::to_string(row.size()) + " entries");
        continue;
      }
      double rsum = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (!(row[j] >= 0.0))
          out.push_back("transition row " + std::to_string(i + 1) + ", column " +
                        std::to_string(j + 1) + " is negative or not a number");
        rsum += row[j];
      }
      if (!(std::abs(rsum - 1.0) <= kRowSumTolerance))
        out.push_back("transition row " + std::to_string(i + 1) + " sums to " +
                      std::to_string(rsum));
    }
  }

  if (emission_mean.size() != n)
    out.push_back("emission_mean has " + std::to_string(emission_mean.size()) +
                  " entries for " + std::to_string(n) + " states");
  if (emission_var.size() != n) {
    out.push_back("emission_var has " + std::to_string(emission_var.size()) +
                  " entries for " + std::to_string(n) + " states");
  } else {
    for (std::size_t i = 0; i < emission_var.size(); ++i) {
      if (!(emission_var[i] >= 0.0))
        out.push_back("emission variance for state " + std::to_string(i + 1) +
                      " is negative or not a number");
    }
  }
  return out;
}

void GaussianHmm::set_initial(std::vector<double> initial) {
  require_clean(initial, transition_, emission_mean_, emission_var_);
  initial_ = std::move(initial);
}

void GaussianHmm::set_transition(std::vector<std::vector<double>> transition) {
  require_clean(initial_, transition, emission_mean_, emission_var_);
  transition_ = std::move(transition);
}

void GaussianHmm::set_emissions(std::vector<double> mean, std::vector<double> var) {
  require_clean(initial_, transition_, mean, var);
  emission_mean_ = std::move(mean);
  emission_var_ = std::move(var);
}

int GaussianHmm::sample_initial(RandomStream& rng) const {
  return static_cast<int>(rng.categorical(initial_)) + 1;
}

int GaussianHmm::step(int state, RandomStream& rng) const {
  if (state < 1 || state > n_states())
    throw std::domain_error("step: state " + std::to_string(state) + " outside 1.." +
                            std::to_string(n_states()));
  return static_cast<int>(rng.categorical(transition_[state - 1])) + 1;
}

double GaussianHmm::emit(int state, RandomStream& rng) const {
  if (state < 1 || state > n_states())
    throw std::domain_error("emit: state " + std::to_string(state) + " outside 1.." +
                            std::to_string(n_states()));
  const double var = emission_var_[state - 1];
  const double mean = emission_mean_[state - 1];
  if (var == 0.0) return mean;  // no draw: keeps zero-variance chains bit-reproducible
  return rng.normal(mean, std::sqrt(var));
}

nlohmann::ordered_json GaussianHmm::to_json() const {
  nlohmann::ordered_json j;
  j["initial"] = initial_;
  j["transition"] = transition_;
  j["emission_mean"] = emission_mean_;
  j["emission_var"] = emission_var_;
  return j;
}

GaussianHmm GaussianHmm::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("chain spec must be a JSON object");
  for (const auto& item : j.items()) {
    const std::string& k = item.key();
    if (k != "initial" && k != "transition" && k != "emission_mean" && k != "emission_var")
      throw std::invalid_argument("unknown chain key '" + k + "'");
  }
  for (const char* k : {"initial", "transition", "emission_mean", "emission_var"}) {
    if (!j.contains(k)) throw std::invalid_argument(std::string("chain spec missing '") + k + "'");
  }
  try {
    return GaussianHmm(j.at("initial").get<std::vector<double>>(),
                       j.at("transition").get<std::vector<std::vector<double>>>(),
                       j.at("emission_mean").get<std::vector<double>>(),
                       j.at("emission_var").get<std::vector<double>>());
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed chain spec: ") + e.what());
  }
}

}  // namespace fluentrx
