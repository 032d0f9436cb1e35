#include "dncp/zoo.hpp"

#include <string>

#include "dncp/errors.hpp"

namespace dncp {

namespace {

NodeSpec gaussian(std::string id, NodeKind kind, std::size_t dim, LinkFn link, double sigma) {
  NodeSpec n;
  n.id = std::move(id);
  n.kind = kind;
  n.dim = dim;
  n.factor.family = Family::Gaussian;
  n.factor.link = std::move(link);
  n.factor.scale.fixed = sigma;
  return n;
}

NodeSpec bernoulli(std::string id, std::size_t dim, LinkFn link) {
  NodeSpec n;
  n.id = std::move(id);
  n.kind = NodeKind::Observed;
  n.dim = dim;
  n.factor.family = Family::Bernoulli;
  link.activation = Activation::Sigmoid;
  n.factor.link = std::move(link);
  return n;
}

LinkFn identity_of(std::string parent) { return LinkFn{{AffineTerm{std::move(parent), ""}}, "", Activation::Identity}; }

LinkFn affine_of(std::string parent, std::string weight, std::string bias, Activation act) {
  return LinkFn{{AffineTerm{std::move(parent), std::move(weight)}}, std::move(bias), act};
}

}  // namespace

FactorGraphModel build_lds_model(double sigma_x, double sigma_z) {
  if (!(sigma_x > 0.0) || !(sigma_z > 0.0)) throw DomainError("LDS scales must be positive");
  ModelSpec spec;
  spec.nodes.push_back(gaussian("z1", NodeKind::Latent, 1, {}, 1.0));
  spec.nodes.push_back(gaussian("x1", NodeKind::Observed, 1, identity_of("z1"), sigma_x));
  spec.nodes.push_back(gaussian("z2", NodeKind::Latent, 1, identity_of("z1"), sigma_z));
  spec.nodes.push_back(gaussian("x2", NodeKind::Observed, 1, identity_of("z2"), sigma_x));
  return build_model(spec);
}

ModelWithParams build_dbn_model(const DbnOptions& options, Rng& rng) {
  if (options.steps < 2) throw ShapeError("a DBN needs at least two time steps");
  if (options.latent_dim == 0 || options.obs_dim == 0) throw ShapeError("DBN dimensions must be positive");
  const std::size_t l = options.latent_dim;
  ModelSpec spec;
  spec.parameters = {{"W_z", l, l}, {"b_z", l, 1}, {"W_x", options.obs_dim, l}};
  for (std::size_t t = 1; t <= options.steps; ++t) {
    const std::string z = "z" + std::to_string(t);
    if (t == 1) {
      spec.nodes.push_back(gaussian(z, NodeKind::Latent, l, {}, 1.0));
    } else {
      const std::string prev = "z" + std::to_string(t - 1);
      spec.nodes.push_back(gaussian(z, NodeKind::Latent, l, affine_of(prev, "W_z", "b_z", Activation::Tanh),
                                    options.sigma_z));
    }
    const std::string source = options.emission_from_previous && t > 1 ? "z" + std::to_string(t - 1) : z;
    spec.nodes.push_back(bernoulli("x" + std::to_string(t), options.obs_dim,
                                   affine_of(source, "W_x", "", Activation::Sigmoid)));
  }
  ModelWithParams out{build_model(spec), {}};
  out.theta = random_parameters(out.model, rng, 1.0);
  return out;
}

FactorGraphModel build_generative_mlp(const MlpOptions& options) {
  const auto& d = options.dims;
  const auto& s = options.sigmas;
  if (d[0] == 0 || d[1] == 0 || d[2] == 0 || options.obs_dim == 0) throw ShapeError("MLP dimensions must be positive");
  if (s[0] <= 0.0) throw ShapeError("the top layer must be stochastic");
  ModelSpec spec;
  spec.parameters = {{"W_1", d[1], d[0]}, {"b_1", d[1], 1}, {"W_2", d[2], d[1]},
                     {"b_2", d[2], 1},    {"W_x", options.obs_dim, d[2]}, {"b_x", options.obs_dim, 1}};
  spec.nodes.push_back(gaussian("z1", NodeKind::Latent, d[0], {}, s[0]));
  spec.nodes.push_back(gaussian("z2", NodeKind::Latent, d[1], affine_of("z1", "W_1", "b_1", Activation::Tanh), s[1]));
  spec.nodes.push_back(gaussian("z3", NodeKind::Latent, d[2], affine_of("z2", "W_2", "b_2", Activation::Tanh), s[2]));
  spec.nodes.push_back(bernoulli("x", options.obs_dim, affine_of("z3", "W_x", "b_x", Activation::Sigmoid)));
  return build_model(spec);
}

FactorGraphModel build_two_layer_model(std::size_t latent_dim, std::size_t obs_dim) {
  if (latent_dim == 0 || obs_dim == 0) throw ShapeError("dimensions must be positive");
  ModelSpec spec;
  spec.parameters = {{"W", obs_dim, latent_dim}, {"b", obs_dim, 1}};
  spec.nodes.push_back(gaussian("z", NodeKind::Latent, latent_dim, {}, 1.0));
  spec.nodes.push_back(bernoulli("x", obs_dim, affine_of("z", "W", "b", Activation::Sigmoid)));
  return build_model(spec);
}

FactorGraphModel build_linear_gaussian_model(double sigma_x, bool learn_scale) {
  ModelSpec spec;
  spec.parameters = {{"w", 1, 1}, {"b", 1, 1}};
  if (learn_scale) spec.parameters.push_back({"log_sigma_x", 1, 1});
  spec.nodes.push_back(gaussian("z", NodeKind::Latent, 1, {}, 1.0));
  NodeSpec x = gaussian("x", NodeKind::Observed, 1, affine_of("z", "w", "b", Activation::Identity), sigma_x);
  if (learn_scale) x.factor.scale.log_param = "log_sigma_x";
  spec.nodes.push_back(std::move(x));
  return build_model(spec);
}

}  // namespace dncp
