#pragma once

#include <array>
#include <cstddef>

#include <Eigen/Dense>

#include "dncp/graph.hpp"
#include "dncp/rng.hpp"

namespace dncp {

struct ModelWithParams {
  FactorGraphModel model;
  Eigen::VectorXd theta;
};

/// z1 ~ N(0,1), x1 ~ N(z1, sx^2), z2 ~ N(z1, sz^2), x2 ~ N(z2, sx^2).
/// No parameters. Throws DomainError for non-positive scales.
FactorGraphModel build_lds_model(double sigma_x, double sigma_z);

struct DbnOptions {
  std::size_t steps = 10;
  std::size_t latent_dim = 2;
  std::size_t obs_dim = 5;
  double sigma_z = 0.1;
  /// Condition x_t on z_{t-1} (x_1 on z_1) instead of z_t.
  bool emission_from_previous = false;
};

/// z_1 ~ N(0, I), z_t ~ N(tanh(W_z z_{t-1} + b_z), sigma_z^2 I),
/// x_t ~ Bernoulli(sigmoid(W_x z_t)). theta ~ N(0, I) from `rng`.
ModelWithParams build_dbn_model(const DbnOptions& options, Rng& rng);

struct MlpOptions {
  std::array<std::size_t, 3> dims = {3, 3, 100};
  std::size_t obs_dim = 784;
  std::array<double, 3> sigmas = {1.0, 1.0, 0.0};
};

/// z1 ~ N(0, s1^2 I), z2 ~ N(tanh(W_1 z1 + b_1), s2^2 I),
/// z3 ~ N(tanh(W_2 z2 + b_2), s3^2 I), x ~ Bernoulli(sigmoid(W_x z3 + b_x)).
/// A layer with sigma 0 is deterministic.
FactorGraphModel build_generative_mlp(const MlpOptions& options);

/// z ~ N(0, I), x ~ Bernoulli(sigmoid(W z + b)).
FactorGraphModel build_two_layer_model(std::size_t latent_dim, std::size_t obs_dim);

/// z ~ N(0, 1), x ~ N(w z + b, sigma_x^2) with parameters w, b and, when
/// `learn_scale` is set, log_sigma_x (otherwise sigma_x is fixed).
FactorGraphModel build_linear_gaussian_model(double sigma_x, bool learn_scale = false);

}  // namespace dncp
