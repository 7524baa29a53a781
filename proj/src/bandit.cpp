#include "fluentrx/bandit.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

namespace fluentrx {

LinUcbPolicy::LinUcbPolicy(std::vector<std::string> arm_names, int dim, double alpha)
    : arm_names_(std::move(arm_names)), dim_(dim), alpha_(alpha) {
  if (arm_names_.empty()) throw std::invalid_argument("policy needs at least one arm");
  if (dim_ < 1) throw std::invalid_argument("context dimension must be >= 1");
  if (!(alpha_ >= 0.0) || !std::isfinite(alpha_))
    throw std::invalid_argument("alpha must be finite and >= 0");
  std::set<std::string_view> seen;
  for (const auto& name : arm_names_) {
    if (name.empty()) throw std::invalid_argument("empty arm name");
    if (!seen.insert(name).second)
      throw std::invalid_argument("duplicate arm name '" + name + "'");
  }
  A_.assign(arm_names_.size(), Eigen::MatrixXd::Identity(dim_, dim_));
  b_.assign(arm_names_.size(), Eigen::VectorXd::Zero(dim_));
}

void LinUcbPolicy::check_arm(int arm) const {
  if (arm < 0 || arm >= n_arms())
    throw std::out_of_range("arm index " + std::to_string(arm) + " outside 0.." +
                            std::to_string(n_arms() - 1));
}

void LinUcbPolicy::check_vector(const Eigen::VectorXd& x) const {
  if (x.size() != dim_)
    throw std::invalid_argument("context has dimension " + std::to_string(x.size()) +
                                ", expected " + std::to_string(dim_));
  if (!x.allFinite()) throw std::domain_error("context contains a non-finite value");
}

Eigen::LLT<Eigen::MatrixXd> LinUcbPolicy::factor(int arm) const {
  Eigen::LLT<Eigen::MatrixXd> llt(A_[static_cast<std::size_t>(arm)]);
  if (llt.info() != Eigen::Success)
    throw std::logic_error("design matrix for arm " + std::to_string(arm) +
                           " is not positive definite");
  return llt;
}

double LinUcbPolicy::ucb_score(int arm, const Eigen::VectorXd& x) const {
  check_arm(arm);
  check_vector(x);
  const auto llt = factor(arm);
  const Eigen::VectorXd theta = llt.solve(b_[static_cast<std::size_t>(arm)]);
  // x' A^-1 x is non-negative in exact arithmetic; clip rounding residue.
  const double spread = std::max(0.0, x.dot(llt.solve(x)));
  return theta.dot(x) + alpha_ * std::sqrt(spread);
}

int LinUcbPolicy::select(const Eigen::VectorXd& x) const {
  check_vector(x);
  int best = 0;
  double best_score = ucb_score(0, x);
  for (int arm = 1; arm < n_arms(); ++arm) {
    const double s = ucb_score(arm, x);
    if (s > best_score) {  // strict: ties keep the lowest index
      best = arm;
      best_score = s;
    }
  }
  return best;
}

void LinUcbPolicy::update(int arm, const Eigen::VectorXd& x, double reward) {
  check_arm(arm);
  check_vector(x);
  if (!std::isfinite(reward)) throw std::domain_error("non-finite reward");
  A_[static_cast<std::size_t>(arm)].noalias() += x * x.transpose();
  b_[static_cast<std::size_t>(arm)] += reward * x;
}

Eigen::VectorXd LinUcbPolicy::theta(int arm) const {
  check_arm(arm);
  return factor(arm).solve(b_[static_cast<std::size_t>(arm)]);
}

const Eigen::MatrixXd& LinUcbPolicy::design(int arm) const {
  check_arm(arm);
  return A_[static_cast<std::size_t>(arm)];
}

const Eigen::VectorXd& LinUcbPolicy::response(int arm) const {
  check_arm(arm);
  return b_[static_cast<std::size_t>(arm)];
}

nlohmann::ordered_json LinUcbPolicy::to_json() const {
  nlohmann::ordered_json j;
  j["dim"] = dim_;
  j["alpha"] = alpha_;
  auto arms = nlohmann::ordered_json::array();
  for (int a = 0; a < n_arms(); ++a) {
    nlohmann::ordered_json arm;
    arm["name"] = arm_names_[static_cast<std::size_t>(a)];
    auto rows = nlohmann::ordered_json::array();
    for (int i = 0; i < dim_; ++i) {
      auto row = nlohmann::ordered_json::array();
      for (int k = 0; k < dim_; ++k) row.push_back(A_[static_cast<std::size_t>(a)](i, k));
      rows.push_back(std::move(row));
    }
    arm["A"] = std::move(rows);
    auto b = nlohmann::ordered_json::array();
    for (int i = 0; i < dim_; ++i) b.push_back(b_[static_cast<std::size_t>(a)](i));
    arm["b"] = std::move(b);
    arms.push_back(std::move(arm));
  }
  j["arms"] = std::move(arms);
  return j;
}

LinUcbPolicy LinUcbPolicy::from_json(const nlohmann::json& j) {
  try {
    const int dim = j.at("dim").get<int>();
    const double alpha = j.at("alpha").get<double>();
    const auto& arms = j.at("arms");
    if (!arms.is_array() || arms.empty())
      throw std::invalid_argument("policy state needs a non-empty arms array");
    std::vector<std::string> names;
    for (const auto& arm : arms) names.push_back(arm.at("name").get<std::string>());
    LinUcbPolicy policy(std::move(names), dim, alpha);
    for (std::size_t a = 0; a < arms.size(); ++a) {
      const auto& arm = arms[a];
      const auto A = arm.at("A").get<std::vector<std::vector<double>>>();
      const auto b = arm.at("b").get<std::vector<double>>();
      if (A.size() != static_cast<std::size_t>(dim) || b.size() != static_cast<std::size_t>(dim))
        throw std::invalid_argument("arm state has wrong dimensions");
      for (int i = 0; i < dim; ++i) {
        if (A[static_cast<std::size_t>(i)].size() != static_cast<std::size_t>(dim))
          throw std::invalid_argument("arm design matrix is not square");
        for (int k = 0; k < dim; ++k) policy.A_[a](i, k) = A[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
        policy.b_[a](i) = b[static_cast<std::size_t>(i)];
      }
      if (!policy.A_[a].isApprox(policy.A_[a].transpose(), 1e-9))
        throw std::invalid_argument("arm design matrix is not symmetric");
    }
    return policy;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed policy state: ") + e.what());
  }
}

Eigen::VectorXd build_context(double dep_emission, double anx_emission, double ins_emission,
                              double measured_fluency) {
  Eigen::VectorXd x(5);
  x << 1.0, dep_emission, anx_emission, ins_emission, measured_fluency;
  return x;
}

}  // namespace fluentrx
