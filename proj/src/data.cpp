#include "fomo/data.hpp"

#include <array>
#include <cstdint>
#include <fstream>
#include <iterator>

namespace fomo {
namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& buf, std::size_t offset, const std::filesystem::path& path) {
  if (offset + 4 > buf.size()) throw FormatError(path.string() + ": truncated header");
  return (std::uint32_t{buf[offset]} << 24) | (std::uint32_t{buf[offset + 1]} << 16) |
         (std::uint32_t{buf[offset + 2]} << 8) | std::uint32_t{buf[offset + 3]};
}

void put_be32(std::ofstream& out, std::uint32_t v) {
  const std::array<char, 4> bytes{static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                                  static_cast<char>(v)};
  out.write(bytes.data(), 4);
}

}  // namespace

Dataset<double> load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
  const auto images = read_file(images_path);
  const auto labels = read_file(labels_path);

  if (read_be32(images, 0, images_path) != kImagesMagic) throw FormatError(images_path.string() + ": bad IDX magic");
  if (read_be32(labels, 0, labels_path) != kLabelsMagic) throw FormatError(labels_path.string() + ": bad IDX magic");

  const std::uint64_t n = read_be32(images, 4, images_path);
  const std::uint64_t rows = read_be32(images, 8, images_path);
  const std::uint64_t cols = read_be32(images, 12, images_path);
  const std::uint64_t n_labels = read_be32(labels, 4, labels_path);
  if (n != n_labels) {
    throw FormatError("image count " + std::to_string(n) + " does not match label count " + std::to_string(n_labels));
  }
  const std::uint64_t d = rows * cols;
  if (images.size() != 16 + n * d) throw FormatError(images_path.string() + ": payload size does not match header");
  if (labels.size() != 8 + n) throw FormatError(labels_path.string() + ": payload size does not match header");

  Dataset<double> ds;
  ds.name = images_path.stem().string();
  ds.height = static_cast<Index>(rows);
  ds.width = static_cast<Index>(cols);
  ds.inputs.resize(static_cast<Index>(n), static_cast<Index>(d));
  for (std::uint64_t i = 0; i < n * d; ++i) ds.inputs.data()[i] = images[16 + i] / 255.0;
  ds.labels.assign(labels.begin() + 8, labels.end());
  int max_label = 1;
  for (int y : ds.labels) max_label = std::max(max_label, y);
  ds.num_classes = max_label + 1;
  return ds;
}

void write_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
               const std::vector<std::uint8_t>& pixels, const std::vector<std::uint8_t>& labels, std::uint32_t rows,
               std::uint32_t cols) {
  if (pixels.size() != labels.size() * rows * cols) throw ContractError("write_idx: pixel count does not match");
  std::ofstream img(images_path, std::ios::binary);
  std::ofstream lab(labels_path, std::ios::binary);
  if (!img || !lab) throw FormatError("write_idx: cannot open output files");
  put_be32(img, kImagesMagic);
  put_be32(img, static_cast<std::uint32_t>(labels.size()));
  put_be32(img, rows);
  put_be32(img, cols);
  img.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  put_be32(lab, kLabelsMagic);
  put_be32(lab, static_cast<std::uint32_t>(labels.size()));
  lab.write(reinterpret_cast<const char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
}

SyntheticKind parse_synthetic_kind(std::string_view name) {
  if (name == "blobs") return SyntheticKind::kBlobs;
  if (name == "spirals") return SyntheticKind::kSpirals;
  throw ConfigError("unknown synthetic dataset '" + std::string(name) + "'");
}

Corruption parse_corruption(std::string_view name) {
  for (auto kind : all_corruptions()) {
    if (to_string(kind) == name) return kind;
  }
  throw ConfigError("unknown corruption '" + std::string(name) + "'");
}

std::string to_string(Corruption kind) {
  switch (kind) {
    case Corruption::kGaussianNoise: return "gaussian-noise";
    case Corruption::kImpulseNoise: return "impulse-noise";
    case Corruption::kBoxBlur: return "box-blur";
    case Corruption::kBrightness: return "brightness";
    case Corruption::kContrast: return "contrast";
  }
  return "unknown";
}

const std::vector<Corruption>& all_corruptions() {
  static const std::vector<Corruption> kinds{Corruption::kGaussianNoise, Corruption::kImpulseNoise,
                                             Corruption::kBoxBlur, Corruption::kBrightness, Corruption::kContrast};
  return kinds;
}

}  // namespace fomo
