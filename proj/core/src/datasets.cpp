#include "dncp/datasets.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>
#include <vector>

#include "dncp/errors.hpp"

namespace dncp {

namespace {

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  if (offset + 4 > bytes.size()) throw TruncatedFile("header ends early");
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

}  // namespace

DatasetHandle parse_idx(std::span<const std::uint8_t> bytes) {
  const std::uint32_t magic = read_be32(bytes, 0);
  DatasetHandle d;
  if (magic == kImageMagic) {
    d.count = read_be32(bytes, 4);
    d.rows = read_be32(bytes, 8);
    d.cols = read_be32(bytes, 12);
    const std::size_t pixels = d.rows * d.cols;
    const std::size_t available = bytes.size() - 16;
    // Compare by division so a hostile header cannot overflow the product.
    if (pixels != 0 && d.count > available / pixels) {
      throw TruncatedFile(std::to_string(d.count) + " images of " + std::to_string(pixels) +
                          " pixels do not fit in " + std::to_string(available) + " bytes");
    }
    d.images.resize(static_cast<Eigen::Index>(d.count), static_cast<Eigen::Index>(pixels));
    for (std::size_t i = 0; i < d.count; ++i) {
      for (std::size_t p = 0; p < pixels; ++p) {
        d.images(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p)) = bytes[16 + i * pixels + p] / 255.0;
      }
    }
    return d;
  }
  if (magic == kLabelMagic) {
    d.count = read_be32(bytes, 4);
    if (bytes.size() - 8 < d.count) {
      throw TruncatedFile("expected " + std::to_string(d.count) + " label bytes, found " +
                          std::to_string(bytes.size() - 8));
    }
    Eigen::VectorXi labels(static_cast<Eigen::Index>(d.count));
    for (std::size_t i = 0; i < d.count; ++i) labels[static_cast<Eigen::Index>(i)] = bytes[8 + i];
    d.labels = std::move(labels);
    return d;
  }
  char buf[16];
  std::snprintf(buf, sizeof buf, "0x%08x", magic);
  throw BadMagic(std::string("unsupported IDX magic ") + buf);
}

DatasetHandle load_idx(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TruncatedFile("cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_idx(bytes);
}

void binarize(DatasetHandle& data, std::uint64_t seed) {
  Rng rng(seed);
  for (Eigen::Index i = 0; i < data.images.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.images.cols(); ++j) {
      data.images(i, j) = rng.bernoulli(data.images(i, j)) ? 1.0 : 0.0;
    }
  }
  data.binarization_seed = seed;
}

void truncate(DatasetHandle& data, std::size_t n) {
  if (n >= data.count) return;
  const auto rows = static_cast<Eigen::Index>(n);
  if (data.images.rows() > 0) data.images.conservativeResize(rows, Eigen::NoChange);
  if (data.labels) data.labels->conservativeResize(rows);
  data.count = n;
}

DatasetHandle synthetic_dataset(const FactorGraphModel& model, const Eigen::VectorXd& theta_true, std::size_t n,
                                Rng& rng) {
  DatasetHandle d;
  d.count = n;
  d.rows = 1;
  d.cols = model.observed_dim();
  d.images.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d.cols));
  for (std::size_t i = 0; i < n; ++i) {
    d.images.row(static_cast<Eigen::Index>(i)) = model.pack_observed(ancestral_sample(model, theta_true, rng)).transpose();
  }
  d.theta_true = theta_true;
  return d;
}

}  // namespace dncp
