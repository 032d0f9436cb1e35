#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>

#include <Eigen/Dense>

#include "dncp/graph.hpp"
#include "dncp/rng.hpp"

namespace dncp {

/// Row-per-item data: images flattened row-major (or observed vectors).
struct DatasetHandle {
  Eigen::MatrixXd images;  // count x (rows * cols)
  std::optional<Eigen::VectorXi> labels;
  std::size_t count = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  /// Seed of the stochastic binarization, when one was applied.
  std::optional<std::uint64_t> binarization_seed;
  /// Parameters that generated a synthetic dataset.
  std::optional<Eigen::VectorXd> theta_true;
};

/// Parses an IDX image file (magic 0x00000803) with pixels scaled to [0, 1],
/// or a label file (magic 0x00000801) into `labels` with an empty image
/// matrix. Throws BadMagic or TruncatedFile.
DatasetHandle load_idx(const std::filesystem::path& path);
DatasetHandle parse_idx(std::span<const std::uint8_t> bytes);

/// Replaces each pixel p by a Bernoulli(p) draw.
void binarize(DatasetHandle& data, std::uint64_t seed);

/// Keeps the first `n` items.
void truncate(DatasetHandle& data, std::size_t n);

/// n ancestral samples of the observed nodes (observed-slot layout per row).
DatasetHandle synthetic_dataset(const FactorGraphModel& model, const Eigen::VectorXd& theta_true, std::size_t n,
                                Rng& rng);

}  // namespace dncp
