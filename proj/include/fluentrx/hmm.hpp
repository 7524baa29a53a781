#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "fluentrx/rng.hpp"

namespace fluentrx {

// Discrete-state Markov chain with one Gaussian emission per state. States
// are 1-based; for the severity chains state 1 is mildest. Parameters are
// validated on construction and every setter re-validates, so a live
// instance always has row-stochastic transitions (rows sum to 1 within
// 1e-9, entries non-negative) and non-negative emission variances.
class GaussianHmm {
 public:
  GaussianHmm(std::vector<double> initial,
              std::vector<std::vector<double>> transition,
              std::vector<double> emission_mean,
              std::vector<double> emission_var);

  // 5-state severity ladder: uniform start; sticky tridiagonal transitions
  // (stay 0.90, shift one severity 0.05 each way, 0.95 stay at the ends);
  // emission means 0.8, 0.7, 0.6, 0.5, 0.4 with variance 0.0025 per state.
  static GaussianHmm severity_default();

  // Empty result means the parameters form a valid chain; otherwise one
  // human-readable violation per entry (rows and states named 1-based).
  static std::vector<std::string> check(
      const std::vector<double>& initial,
      const std::vector<std::vector<double>>& transition,
      const std::vector<double>& emission_mean,
      const std::vector<double>& emission_var);

  int n_states() const { return static_cast<int>(initial_.size()); }
  const std::vector<double>& initial() const { return initial_; }
  const std::vector<std::vector<double>>& transition() const { return transition_; }
  const std::vector<double>& emission_mean() const { return emission_mean_; }
  const std::vector<double>& emission_var() const { return emission_var_; }

  // Each setter re-validates the full parameter set and throws
  // std::invalid_argument (listing every violation) without mutating on
  // failure.
  void set_initial(std::vector<double> initial);
  void set_transition(std::vector<std::vector<double>> transition);
  void set_emissions(std::vector<double> mean, std::vector<double> var);

  // Draws a start state from the initial distribution. 1-based.
  int sample_initial(RandomStream& rng) const;

  // One transition from `state`. Throws std::domain_error off-range.
  int step(int state, RandomStream& rng) const;

  // Gaussian observation for `state`. A zero-variance state emits its mean
  // without consuming any randomness.
  double emit(int state, RandomStream& rng) const;

  nlohmann::ordered_json to_json() const;
  // Requires exactly the keys initial/transition/emission_mean/emission_var;
  // anything missing, extra, or invalid throws std::invalid_argument.
  static GaussianHmm from_json(const nlohmann::json& j);

 private:
  std::vector<double> initial_;
  std::vector<std::vector<double>> transition_;
  std::vector<double> emission_mean_;
  std::vector<double> emission_var_;
};

}  // namespace fluentrx
