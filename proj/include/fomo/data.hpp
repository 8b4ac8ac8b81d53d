#ifndef FOMO_DATA_HPP
#define FOMO_DATA_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <numeric>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fomo/random.hpp"
#include "fomo/tensor.hpp"

namespace fomo {

/// Labelled inputs scaled to [0, 1]. Rows of `inputs` are examples; image
/// data keeps its height x width geometry for spatial corruptions.
template <typename Scalar>
struct Dataset {
  Matrix<Scalar> inputs;
  std::vector<int> labels;
  int num_classes = 0;
  std::string name;
  Index height = 1;
  Index width = 0;

  Index size() const { return inputs.rows(); }
  Index dim() const { return inputs.cols(); }

  void validate() const {
    if (static_cast<Index>(labels.size()) != inputs.rows()) {
      throw ContractError(name + ": " + std::to_string(labels.size()) + " labels for " +
                          std::to_string(inputs.rows()) + " inputs");
    }
    if (height * width != inputs.cols()) throw ContractError(name + ": image geometry does not match input width");
    for (int y : labels) {
      if (y < 0 || y >= num_classes) throw IndexError(name + ": label " + std::to_string(y) + " out of range");
    }
    if (inputs.size() > 0 && (inputs.minCoeff() < Scalar(0) || inputs.maxCoeff() > Scalar(1))) {
      throw ContractError(name + ": inputs outside [0, 1]");
    }
  }

  Dataset subset(const std::vector<Index>& rows) const {
    Dataset out;
    out.inputs.resize(static_cast<Index>(rows.size()), dim());
    out.labels.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      out.inputs.row(static_cast<Index>(i)) = inputs.row(rows[i]);
      out.labels.push_back(labels[static_cast<std::size_t>(rows[i])]);
    }
    out.num_classes = num_classes;
    out.name = name;
    out.height = height;
    out.width = width;
    return out;
  }

  template <typename Other>
  Dataset<Other> cast() const {
    return Dataset<Other>{inputs.template cast<Other>(), labels, num_classes, name, height, width};
  }
};

/// Parses an IDX image file (magic 0x00000803) and its IDX label file
/// (magic 0x00000801). Pixel bytes are scaled by 1/255. Throws FormatError
/// on bad magic, truncation, or mismatched counts.
Dataset<double> load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path);

/// Writes the IDX pair; used to build fixtures.
void write_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
               const std::vector<std::uint8_t>& pixels, const std::vector<std::uint8_t>& labels, std::uint32_t rows,
               std::uint32_t cols);

/// Moves exactly round(fraction * n) labels, chosen without replacement, to a
/// different class drawn uniformly.
inline void flip_labels(std::vector<int>& labels, int num_classes, double fraction, Rng& rng) {
  if (!(fraction >= 0.0 && fraction < 1.0)) {
    throw ConfigError("label_noise must lie in [0, 1), got " + std::to_string(fraction));
  }
  if (num_classes < 2) throw ConfigError("label noise needs K >= 2");
  const auto flips = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(labels.size())));
  std::vector<std::size_t> all(labels.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::vector<std::size_t> chosen;
  std::sample(all.begin(), all.end(), std::back_inserter(chosen), flips, rng);
  std::uniform_int_distribution<int> other(1, num_classes - 1);
  for (auto i : chosen) labels[i] = (labels[i] + other(rng)) % num_classes;
}

enum class SyntheticKind { kBlobs, kSpirals };

SyntheticKind parse_synthetic_kind(std::string_view name);

/// Geometry shared by every sample drawn from one synthetic problem.
struct SyntheticLayout {
  double spread = 0.08;  // per-coordinate Gaussian scale
  Index dim = 2;
  std::uint64_t seed = 0;  // class centres above two dimensions
};

/// K-class toy problems in [0,1]^dim (2-D by default). Class k owns rows
/// i with i % K == k before noise; exactly round(label_noise * n) labels are
/// then flipped to a different class chosen uniformly.
template <typename Scalar>
Dataset<Scalar> make_synthetic(SyntheticKind kind, Index n, int num_classes, double label_noise, Rng& rng,
                               const SyntheticLayout& layout = {}) {
  const Index dim = layout.dim;
  const double spread = layout.spread;
  if (num_classes < 2) throw ConfigError("synthetic data needs K >= 2, got " + std::to_string(num_classes));
  if (!(label_noise >= 0.0 && label_noise < 1.0)) {
    throw ConfigError("label_noise must lie in [0, 1), got " + std::to_string(label_noise));
  }
  if (n <= 0) throw ConfigError("synthetic data needs n > 0");
  if (dim < 2 || (kind == SyntheticKind::kSpirals && dim != 2)) {
    throw ConfigError("synthetic data dimension must be >= 2 (spirals: exactly 2)");
  }
  Dataset<Scalar> ds;
  ds.name = kind == SyntheticKind::kBlobs ? "blobs" : "spirals";
  ds.num_classes = num_classes;
  ds.height = 1;
  ds.width = dim;
  ds.inputs.resize(n, dim);
  ds.labels.resize(static_cast<std::size_t>(n));
  std::normal_distribution<double> noise(0.0, spread);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double two_pi = 2.0 * std::numbers::pi;

  if (!(spread >= 0.0)) throw ConfigError("synthetic spread must be >= 0");

  // Class centres: evenly spaced on a circle in the plane; in higher
  // dimensions, uniform in [0.2, 0.8]^dim from the layout seed.
  Matrix<double> centres(num_classes, dim);
  Rng centre_rng = derive_rng(layout.seed, {0xce47u});
  for (int k = 0; k < num_classes; ++k) {
    if (dim == 2) {
      centres(k, 0) = 0.5 + 0.3 * std::cos(two_pi * k / num_classes);
      centres(k, 1) = 0.5 + 0.3 * std::sin(two_pi * k / num_classes);
    } else {
      for (Index j = 0; j < dim; ++j) centres(k, j) = 0.2 + 0.6 * unit(centre_rng);
    }
  }
  for (Index i = 0; i < n; ++i) {
    const int k = static_cast<int>(i % num_classes);
    if (kind == SyntheticKind::kBlobs) {
      for (Index j = 0; j < dim; ++j) {
        ds.inputs(i, j) = static_cast<Scalar>(std::clamp(centres(k, j) + noise(rng), 0.0, 1.0));
      }
    } else {
      const double t = unit(rng);
      const double r = 0.05 + 0.4 * t;
      const double angle = two_pi * k / num_classes + 1.5 * std::numbers::pi * t;
      ds.inputs(i, 0) = static_cast<Scalar>(std::clamp(0.5 + r * std::cos(angle) + 0.5 * noise(rng), 0.0, 1.0));
      ds.inputs(i, 1) = static_cast<Scalar>(std::clamp(0.5 + r * std::sin(angle) + 0.5 * noise(rng), 0.0, 1.0));
    }
    ds.labels[static_cast<std::size_t>(i)] = k;
  }
  flip_labels(ds.labels, num_classes, label_noise, rng);
  return ds;
}

/// Shuffled split: floor(ratio * n) training rows, the remainder held out.
template <typename Scalar>
std::pair<Dataset<Scalar>, Dataset<Scalar>> split(const Dataset<Scalar>& ds, std::uint64_t seed, double ratio = 0.9) {
  if (ds.size() < 10) throw ContractError("split needs at least 10 examples, got " + std::to_string(ds.size()));
  std::vector<Index> order(static_cast<std::size_t>(ds.size()));
  std::iota(order.begin(), order.end(), Index{0});
  Rng rng = derive_rng(seed, {0x5b1u});
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(ds.size())));
  std::vector<Index> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<Index> held(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  return {ds.subset(train), ds.subset(held)};
}

enum class Corruption { kGaussianNoise, kImpulseNoise, kBoxBlur, kBrightness, kContrast };

Corruption parse_corruption(std::string_view name);
std::string to_string(Corruption kind);
const std::vector<Corruption>& all_corruptions();

/// Box-blur kernel width per severity 0..5.
inline Index blur_kernel(int severity) {
  static constexpr Index widths[] = {1, 3, 3, 5, 5, 7};
  return widths[severity];
}

/// Parametric corruption at severity 0..5 (0 is the identity). Returns a new
/// matrix clamped to [0, 1]; x is left untouched.
template <typename Scalar>
Matrix<Scalar> corrupt(const Matrix<Scalar>& x, Corruption kind, int severity, Index height, Index width, Rng& rng) {
  if (severity < 0 || severity > 5) throw ConfigError("corruption severity must lie in 0..5");
  if (height * width != x.cols()) throw DimensionError("corruption geometry does not match input width");
  if (severity == 0) return x;
  const double k = severity;
  Matrix<Scalar> out = x;
  switch (kind) {
    case Corruption::kGaussianNoise: {
      std::normal_distribution<double> g(0.0, 0.02 * k);
      for (Index i = 0; i < out.size(); ++i) out.data()[i] += static_cast<Scalar>(g(rng));
      break;
    }
    case Corruption::kImpulseNoise: {
      std::bernoulli_distribution hit(0.01 * k);
      std::bernoulli_distribution salt(0.5);
      for (Index i = 0; i < out.size(); ++i) {
        if (hit(rng)) out.data()[i] = salt(rng) ? Scalar(1) : Scalar(0);
      }
      break;
    }
    case Corruption::kBoxBlur: {
      const Index r = blur_kernel(severity) / 2;
      const Index w = 2 * r + 1;
      const auto norm = static_cast<Scalar>(w * w);
      for (Index row = 0; row < x.rows(); ++row) {
        for (Index i = 0; i < height; ++i) {
          for (Index j = 0; j < width; ++j) {
            Scalar acc = 0;
            for (Index di = -r; di <= r; ++di) {
              const Index ii = std::clamp<Index>(i + di, 0, height - 1);
              for (Index dj = -r; dj <= r; ++dj) {
                const Index jj = std::clamp<Index>(j + dj, 0, width - 1);
                acc += x(row, ii * width + jj);
              }
            }
            out(row, i * width + j) = acc / norm;
          }
        }
      }
      break;
    }
    case Corruption::kBrightness:
      out.array() += static_cast<Scalar>(0.05 * k);
      break;
    case Corruption::kContrast: {
      const auto gain = static_cast<Scalar>(1.0 - 0.1 * k);
      for (Index row = 0; row < out.rows(); ++row) {
        const Scalar mean = out.row(row).mean();
        out.row(row) = ((out.row(row).array() - mean) * gain + mean).matrix();
      }
      break;
    }
  }
  return out.cwiseMax(Scalar(0)).cwiseMin(Scalar(1));
}

}  // namespace fomo

#endif  // FOMO_DATA_HPP
