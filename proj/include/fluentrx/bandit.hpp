#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

namespace fluentrx {

// Disjoint-model LinUCB over a fixed arm set. Per arm, A = I + sum x x^T
// and b = sum r x; theta = A^-1 b; score(x) = x.theta + alpha sqrt(x A^-1 x).
// A stays symmetric positive definite under update, so scores are always
// finite for finite inputs.
class LinUcbPolicy {
 public:
  // Arm names must be unique and non-empty; dim >= 1; alpha >= 0.
  LinUcbPolicy(std::vector<std::string> arm_names, int dim, double alpha);

  int n_arms() const { return static_cast<int>(arm_names_.size()); }
  int dim() const { return dim_; }
  double alpha() const { return alpha_; }
  const std::vector<std::string>& arm_names() const { return arm_names_; }

  // Throws std::out_of_range for a bad arm, std::invalid_argument on a
  // dimension mismatch, std::domain_error on non-finite input, and
  // std::logic_error if the arm's design matrix has been corrupted (not
  // positive definite).
  double ucb_score(int arm, const Eigen::VectorXd& x) const;

  // Arm with the highest score; exact ties resolve to the lowest index.
  int select(const Eigen::VectorXd& x) const;

  // Rank-one update of the chosen arm. Same error contract as ucb_score;
  // a non-finite reward throws std::domain_error.
  void update(int arm, const Eigen::VectorXd& x, double reward);

  Eigen::VectorXd theta(int arm) const;
  const Eigen::MatrixXd& design(int arm) const;    // A
  const Eigen::VectorXd& response(int arm) const;  // b

  // {"dim":., "alpha":., "arms":[{"name":., "A":[[..]], "b":[..]}]}.
  nlohmann::ordered_json to_json() const;
  static LinUcbPolicy from_json(const nlohmann::json& j);

 private:
  void check_arm(int arm) const;
  void check_vector(const Eigen::VectorXd& x) const;
  Eigen::LLT<Eigen::MatrixXd> factor(int arm) const;

  std::vector<std::string> arm_names_;
  int dim_;
  double alpha_;
  std::vector<Eigen::MatrixXd> A_;
  std::vector<Eigen::VectorXd> b_;
};

// Feature layout used by the treatment harness: a constant 1 bias term,
// the three condition emissions, then the latest measured fluency.
Eigen::VectorXd build_context(double dep_emission, double anx_emission,
                              double ins_emission, double measured_fluency);

}  // namespace fluentrx
