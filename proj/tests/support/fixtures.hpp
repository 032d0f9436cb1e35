#pragma once

// Small model builders shared by the unit and acceptance tests.

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dncp/graph.hpp"
#include "dncp/reparam.hpp"
#include "dncp/rng.hpp"
#include "dncp/zoo.hpp"

namespace fixture {

inline dncp::LinkFn identity_of(std::string parent) {
  return dncp::LinkFn{{dncp::AffineTerm{std::move(parent), ""}}, "", dncp::Activation::Identity};
}

inline dncp::LinkFn affine_of(std::string parent, std::string weight, std::string bias = "",
                              dncp::Activation act = dncp::Activation::Identity) {
  return dncp::LinkFn{{dncp::AffineTerm{std::move(parent), std::move(weight)}}, std::move(bias), act};
}

inline dncp::NodeSpec gaussian(std::string id, dncp::NodeKind kind, dncp::LinkFn link = {}, double sigma = 1.0,
                               std::size_t dim = 1) {
  dncp::NodeSpec n;
  n.id = std::move(id);
  n.kind = kind;
  n.dim = dim;
  n.factor.family = dncp::Family::Gaussian;
  n.factor.link = std::move(link);
  n.factor.scale.fixed = sigma;
  return n;
}

inline dncp::NodeSpec of_family(std::string id, dncp::NodeKind kind, dncp::Family family, dncp::LinkFn link = {},
                                double scale = 1.0, std::size_t dim = 1) {
  dncp::NodeSpec n = gaussian(std::move(id), kind, std::move(link), scale, dim);
  n.factor.family = family;
  return n;
}

inline dncp::NodeSpec bernoulli(std::string id, dncp::LinkFn link = {}, std::size_t dim = 1) {
  dncp::NodeSpec n;
  n.id = std::move(id);
  n.kind = dncp::NodeKind::Observed;
  n.dim = dim;
  n.factor.family = dncp::Family::Bernoulli;
  link.activation = dncp::Activation::Sigmoid;
  n.factor.link = std::move(link);
  return n;
}

struct ZooCase {
  std::string name;
  dncp::FactorGraphModel model;
  Eigen::VectorXd theta;
};

/// Every zoo model at moderate size, each in centered and fully
/// reparameterized form.
inline std::vector<ZooCase> zoo_cases(std::uint64_t seed = 11) {
  dncp::Rng rng(seed);
  std::vector<ZooCase> centered;
  centered.push_back({"lds", dncp::build_lds_model(0.7, 0.3), Eigen::VectorXd()});
  {
    dncp::DbnOptions o;
    o.steps = 4;
    o.sigma_z = 0.3;
    auto m = dncp::build_dbn_model(o, rng);
    centered.push_back({"dbn", std::move(m.model), std::move(m.theta)});
  }
  {
    dncp::MlpOptions o;
    o.dims = {3, 3, 8};
    o.obs_dim = 12;
    o.sigmas = {1.0, 0.5, 0.0};
    auto m = dncp::build_generative_mlp(o);
    Eigen::VectorXd th = dncp::random_parameters(m, rng, 0.5);
    centered.push_back({"mlp", std::move(m), std::move(th)});
  }
  {
    auto m = dncp::build_two_layer_model(2, 6);
    Eigen::VectorXd th = dncp::random_parameters(m, rng, 1.0);
    centered.push_back({"two_layer", std::move(m), std::move(th)});
  }
  {
    auto m = dncp::build_linear_gaussian_model(0.8, true);
    Eigen::VectorXd th = dncp::random_parameters(m, rng, 0.5);
    centered.push_back({"linear_gaussian", std::move(m), std::move(th)});
  }
  std::vector<ZooCase> all;
  for (auto& c : centered) {
    auto r = dncp::apply_plan(c.model, dncp::full_dncp_plan(c.model));
    all.push_back({c.name + "_dncp", std::move(r), c.theta});
    all.push_back(std::move(c));
  }
  return all;
}

}  // namespace fixture
