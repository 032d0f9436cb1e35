#pragma once

#include <map>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "dncp/graph.hpp"

namespace dncp {

/// Invertible map z = g(pa, eps, theta) for one latent node, applied
/// coordinatewise. `loc` is the node's link output (mean, lower bound, rate or
/// log-mean) and `scale` the per-coordinate scale.
struct DncpTransform {
  std::string node_id;
  TransformKind kind = TransformKind::GaussianLocationScale;
  Family noise = Family::StandardNormalAux;
  LinkFn link;
  ScaleSpec scale;

  [[nodiscard]] Eigen::VectorXd g(const Eigen::VectorXd& loc, const Eigen::VectorXd& scale,
                                  const Eigen::VectorXd& eps) const;
  /// Throws NonInvertible when z lies outside the image of g.
  [[nodiscard]] Eigen::VectorXd g_inverse(const Eigen::VectorXd& loc, const Eigen::VectorXd& scale,
                                          const Eigen::VectorXd& z) const;
  /// log |dz_k / deps_k| per coordinate.
  [[nodiscard]] Eigen::VectorXd jacobian_log_abs_det(const Eigen::VectorXd& loc, const Eigen::VectorXd& scale,
                                                     const Eigen::VectorXd& eps) const;
  /// log p(eps), summed over coordinates; -inf outside the support.
  [[nodiscard]] double noise_log_density(const Eigen::VectorXd& eps) const;

  // Same maps with loc and scale computed from the parents' values.
  [[nodiscard]] Eigen::VectorXd g(const ParamLayout& layout, const Eigen::VectorXd& theta,
                                  const Assignment& parents, const Eigen::VectorXd& eps) const;
  [[nodiscard]] Eigen::VectorXd g_inverse(const ParamLayout& layout, const Eigen::VectorXd& theta,
                                          const Assignment& parents, const Eigen::VectorXd& z) const;
};

/// z = mu(pa) + sigma * eps for Gaussian nodes (eps ~ N(0,1)) and
/// z = loc(pa) + width * eps for Uniform nodes (eps ~ U(0,1)).
/// Throws ZeroScale for a fixed scale below the floor, UnsupportedFamily otherwise.
DncpTransform location_scale_transform(const NodeSpec& node);
/// z = -log(1 - eps) / rate(pa), eps ~ U(0,1). Exponential nodes only.
DncpTransform inverse_cdf_transform(const NodeSpec& node);
/// z = exp(mu(pa) + sigma * eps), eps ~ N(0,1). LogNormal nodes only.
DncpTransform composition_transform(const NodeSpec& node);
/// The registered transform for the node's family.
DncpTransform default_transform(const NodeSpec& node);

/// Latent node id -> transform. Nodes not listed stay centered.
using ParameterizationPlan = std::map<std::string, DncpTransform, std::less<>>;

/// Every latent node reparameterized with its default transform.
ParameterizationPlan full_dncp_plan(const FactorGraphModel& model);

/// Id of the auxiliary root that feeds a reparameterized node.
std::string aux_id(std::string_view node_id);

/// Replaces each planned latent node by a deterministic node fed by a new
/// auxiliary root `eps_<id>` declared just before it. Throws ShapeError.
FactorGraphModel apply_plan(const FactorGraphModel& model, const ParameterizationPlan& plan);

/// Forward pass over the centered model: unplanned latents are read from
/// `eps` under their own id, planned ones are computed from `eps_<id>`.
/// Returns every latent and deterministic value of the centered model.
Assignment z_from_eps(const FactorGraphModel& model, const ParameterizationPlan& plan, const Assignment& eps,
                      const Eigen::VectorXd& theta);
/// Inverse of z_from_eps. Throws NonInvertible.
Assignment eps_from_z(const FactorGraphModel& model, const ParameterizationPlan& plan, const Assignment& z,
                      const Eigen::VectorXd& theta);

/// Translates flat free coordinates between a centered model and its
/// reparameterized counterpart.
class CoordinateMap {
 public:
  CoordinateMap(const FactorGraphModel& centered, ParameterizationPlan plan);

  [[nodiscard]] const FactorGraphModel& centered() const { return centered_; }
  [[nodiscard]] const FactorGraphModel& reparameterized() const { return reparameterized_; }
  [[nodiscard]] const ParameterizationPlan& plan() const { return plan_; }

  [[nodiscard]] Eigen::VectorXd to_eps(const Eigen::VectorXd& z, const Eigen::VectorXd& theta) const;
  [[nodiscard]] Eigen::VectorXd to_z(const Eigen::VectorXd& eps, const Eigen::VectorXd& theta) const;

 private:
  FactorGraphModel centered_;
  ParameterizationPlan plan_;
  FactorGraphModel reparameterized_;
};

}  // namespace dncp
