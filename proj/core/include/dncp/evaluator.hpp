#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dncp/autodiff.hpp"
#include "dncp/graph.hpp"

namespace dncp {

/// Differentiable log-density of one model.
///
/// The expression graph is built once: one input leaf per parameter block and
/// per non-deterministic node, deterministic nodes expanded inline. Parameters
/// and observed values are set once and reused; the free coordinates (latent
/// and auxiliary nodes, in `model.free_slots()` layout) are supplied per call.
///
/// Points outside a factor's support evaluate to -inf with zero gradients.
/// Other non-finite results throw NonFinite.
class ModelEvaluator {
 public:
  explicit ModelEvaluator(FactorGraphModel model);

  [[nodiscard]] const FactorGraphModel& model() const { return model_; }

  void set_parameters(const Eigen::VectorXd& theta);
  [[nodiscard]] const Eigen::VectorXd& parameters() const { return theta_; }
  /// Observed values in `model.observed_slots()` layout.
  void set_observed(const Eigen::VectorXd& x);

  /// Sum of the factors of every non-deterministic node.
  [[nodiscard]] ad::ExprId joint_root() const { return joint_; }
  /// Sum of the observed nodes' factors.
  [[nodiscard]] ad::ExprId likelihood_root() const { return likelihood_; }
  /// Adds a root summing the factors of the given nodes (by index).
  /// Deterministic nodes contribute nothing.
  ad::ExprId factor_root(std::span<const std::size_t> nodes);

  /// Value of `root` at the free coordinates. Gradients are written when the
  /// pointers are non-null.
  double evaluate(ad::ExprId root, const Eigen::VectorXd& free, Eigen::VectorXd* free_grad = nullptr,
                  Eigen::VectorXd* theta_grad = nullptr);

  double log_joint(const Eigen::VectorXd& free, Eigen::VectorXd* free_grad = nullptr,
                   Eigen::VectorXd* theta_grad = nullptr) {
    return evaluate(joint_, free, free_grad, theta_grad);
  }
  double log_likelihood(const Eigen::VectorXd& free, Eigen::VectorXd* free_grad = nullptr,
                        Eigen::VectorXd* theta_grad = nullptr) {
    return evaluate(likelihood_, free, free_grad, theta_grad);
  }

  /// Every node's value (deterministic ones included) at the free coordinates.
  Assignment complete_values(const Eigen::VectorXd& free);

 private:
  enum class Support { Interval, Positive, NonNegative, OpenUnit };
  struct SupportCheck {
    Support kind;
    ad::ExprId x = 0;
    ad::ExprId lo = 0;     // Interval: [lo, lo + width]
    ad::ExprId width = 0;
  };

  void bind_free(const Eigen::VectorXd& free);
  [[nodiscard]] bool in_support(ad::ExprId root) const;
  ad::ExprId build_link(const LinkFn& link, std::size_t dim, bool apply_activation);
  ad::ExprId build_scale(const ScaleSpec& scale);
  ad::ExprId build_factor(std::size_t i);
  ad::ExprId register_root(ad::ExprId root, std::span<const std::size_t> nodes);

  FactorGraphModel model_;
  ad::ExprGraph graph_;
  ad::InputBinding binding_;
  Eigen::VectorXd theta_;
  std::map<std::string, ad::ExprId, std::less<>> param_expr_;
  std::vector<ad::ExprId> value_expr_;                // per node
  std::vector<ad::ExprId> factor_expr_;               // per node, unused for deterministic nodes
  std::vector<std::size_t> node_slot_;                // per node, unused for deterministic nodes
  std::vector<std::vector<SupportCheck>> support_;    // per node
  std::vector<std::pair<ad::ExprId, std::vector<std::size_t>>> roots_;  // root -> nodes with factors
  ad::ExprId joint_ = 0;
  ad::ExprId likelihood_ = 0;
};

// One-shot convenience wrappers. The assignment must hold every latent,
// auxiliary and observed node.

double log_joint(const FactorGraphModel& model, const Eigen::VectorXd& theta, const Assignment& a);
/// Gradient over the free coordinates in `model.free_slots()` layout.
Eigen::VectorXd grad_log_joint_latents(const FactorGraphModel& model, const Eigen::VectorXd& theta,
                                       const Assignment& a);
Eigen::VectorXd grad_log_joint_params(const FactorGraphModel& model, const Eigen::VectorXd& theta,
                                      const Assignment& a);

}  // namespace dncp
