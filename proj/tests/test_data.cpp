#include <algorithm>
#include <fstream>
#include <set>
#include <vector>

#include "doctest.h"
#include "fomo/data.hpp"
#include "support.hpp"

using namespace fomo;
using fomo::testing::random_matrix;
using fomo::testing::scratch_dir;
using M = Matrix<double>;

namespace {

void write_bytes(const std::filesystem::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream f(p, std::ios::binary);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("idx fixture round trip") {
  const auto dir = scratch_dir("idx");
  // Hand-built bytes, independent of write_idx.
  write_bytes(dir / "img", {0, 0, 8, 3, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0, 2, 0, 255, 0, 255});
  write_bytes(dir / "lbl", {0, 0, 8, 1, 0, 0, 0, 1, 7});
  const auto ds = load_idx(dir / "img", dir / "lbl");
  CHECK(ds.size() == 1);
  CHECK(ds.dim() == 4);
  CHECK(ds.height == 2);
  CHECK(ds.width == 2);
  M row(1, 4);
  row << 0, 1, 0, 1;
  CHECK(ds.inputs == row);
  CHECK(ds.labels == std::vector<int>{7});
  CHECK(ds.num_classes == 8);

  write_idx(dir / "img2", dir / "lbl2", {0, 255, 0, 255}, {7}, 2, 2);
  CHECK(read_bytes(dir / "img2") == read_bytes(dir / "img"));
  CHECK(read_bytes(dir / "lbl2") == read_bytes(dir / "lbl"));
}

TEST_CASE("idx errors") {
  const auto dir = scratch_dir("idx-bad");
  write_idx(dir / "img", dir / "lbl", {1, 2, 3, 4, 5, 6, 7, 8}, {0, 1}, 2, 2);
  auto bytes = read_bytes(dir / "img");

  auto truncated = bytes;
  truncated.pop_back();
  write_bytes(dir / "trunc", truncated);
  CHECK_THROWS_AS(load_idx(dir / "trunc", dir / "lbl"), FormatError);
  write_bytes(dir / "short", {0, 0, 8});
  CHECK_THROWS_AS(load_idx(dir / "short", dir / "lbl"), FormatError);

  auto magic = bytes;
  magic[3] = 0x01;
  write_bytes(dir / "magic", magic);
  CHECK_THROWS_AS(load_idx(dir / "magic", dir / "lbl"), FormatError);
  CHECK_THROWS_AS(load_idx(dir / "img", dir / "img"), FormatError);

  write_idx(dir / "img3", dir / "lbl3", {1, 2, 3, 4}, {0}, 2, 2);
  CHECK_THROWS_AS(load_idx(dir / "img", dir / "lbl3"), FormatError);
  CHECK_THROWS_AS(load_idx(dir / "missing", dir / "lbl"), FormatError);
}

TEST_CASE("synthetic label noise flips an exact count") {
  for (double noise : {0.0, 0.1, 0.2, 0.37}) {
    Rng clean_rng(5), noisy_rng(5);
    const auto clean = make_synthetic<double>(SyntheticKind::kBlobs, 1000, 4, 0.0, clean_rng);
    const auto noisy = make_synthetic<double>(SyntheticKind::kBlobs, 1000, 4, noise, noisy_rng);
    CHECK(clean.inputs == noisy.inputs);
    long differ = 0;
    for (std::size_t i = 0; i < clean.labels.size(); ++i) differ += clean.labels[i] != noisy.labels[i];
    CHECK(differ == std::lround(noise * 1000));
  }
}

TEST_CASE("separated blobs are solved by a nearest-centroid oracle") {
  Rng rng(6);
  const auto ds = make_synthetic<double>(SyntheticKind::kBlobs, 2000, 4, 0.0, rng);
  M centroid = M::Zero(4, 2);
  std::vector<int> count(4, 0);
  for (Index i = 0; i < ds.size(); ++i) {
    centroid.row(ds.labels[static_cast<std::size_t>(i)]) += ds.inputs.row(i);
    ++count[static_cast<std::size_t>(ds.labels[static_cast<std::size_t>(i)])];
  }
  for (int k = 0; k < 4; ++k) centroid.row(k) /= count[static_cast<std::size_t>(k)];
  int correct = 0;
  for (Index i = 0; i < ds.size(); ++i) {
    Index best = 0;
    (centroid.rowwise() - ds.inputs.row(i)).rowwise().squaredNorm().minCoeff(&best);
    correct += best == ds.labels[static_cast<std::size_t>(i)];
  }
  CHECK(correct / 2000.0 > 0.99);
}

TEST_CASE("synthetic generators are seeded, bounded and validated") {
  for (auto kind : {SyntheticKind::kBlobs, SyntheticKind::kSpirals}) {
    Rng a(7), b(7);
    const auto d1 = make_synthetic<double>(kind, 500, 3, 0.2, a);
    const auto d2 = make_synthetic<double>(kind, 500, 3, 0.2, b);
    CHECK(d1.inputs == d2.inputs);
    CHECK(d1.labels == d2.labels);
    CHECK(d1.inputs.minCoeff() >= 0.0);
    CHECK(d1.inputs.maxCoeff() <= 1.0);
    CHECK_NOTHROW(d1.validate());
  }
  Rng rng(8);
  const auto high = make_synthetic<double>(SyntheticKind::kBlobs, 300, 5, 0.1, rng, {0.3, 20, 4});
  CHECK(high.dim() == 20);
  CHECK_NOTHROW(high.validate());
  CHECK_THROWS_AS(make_synthetic<double>(SyntheticKind::kBlobs, 100, 1, 0.0, rng), ConfigError);
  CHECK_THROWS_AS(make_synthetic<double>(SyntheticKind::kBlobs, 100, 3, 1.0, rng), ConfigError);
  CHECK_THROWS_AS(make_synthetic<double>(SyntheticKind::kSpirals, 100, 3, 0.0, rng, {0.08, 3, 0}), ConfigError);
  CHECK_THROWS_AS(parse_synthetic_kind("moons"), ConfigError);
}

TEST_CASE("split") {
  Rng rng(9);
  auto ds = make_synthetic<double>(SyntheticKind::kBlobs, 100, 2, 0.0, rng);
  // Tag each row with its index so the partition can be recovered.
  for (Index i = 0; i < 100; ++i) ds.inputs(i, 0) = static_cast<double>(i) / 100;
  const auto [train, val] = split(ds, 3);
  CHECK(train.size() == 90);
  CHECK(val.size() == 10);
  std::set<long> seen;
  for (const auto* part : {&train, &val}) {
    for (Index i = 0; i < part->size(); ++i) seen.insert(std::lround(part->inputs(i, 0) * 100));
  }
  CHECK(seen.size() == 100);
  CHECK(*seen.begin() == 0);
  CHECK(*seen.rbegin() == 99);

  const auto again = split(ds, 3);
  CHECK(again.first.inputs == train.inputs);
  CHECK(split(ds, 4).first.inputs != train.inputs);
  CHECK(split(ds.subset({0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10}), 0).first.size() == 9);
  CHECK_THROWS_AS(split(ds.subset({0, 1, 2}), 0), ContractError);
}

TEST_CASE("corruption severity zero is the identity") {
  Rng rng(10);
  const M x = random_matrix(3, 16, rng, 0, 1);
  for (auto kind : all_corruptions()) CHECK(corrupt(x, kind, 0, 4, 4, rng) == x);
}

TEST_CASE("brightness and contrast closed forms") {
  Rng rng(11);
  const M half = M::Constant(2, 9, 0.5);
  for (int k = 1; k <= 5; ++k) {
    const M b = corrupt(half, Corruption::kBrightness, k, 3, 3, rng);
    CHECK((b.array() - (0.5 + 0.05 * k)).abs().maxCoeff() < 1e-15);
    CHECK(corrupt(half, Corruption::kContrast, k, 3, 3, rng) == half);
  }
  CHECK(corrupt(M(M::Constant(1, 4, 0.99)), Corruption::kBrightness, 5, 2, 2, rng) == M::Ones(1, 4));

  M ramp(1, 4);
  ramp << 0.2, 0.4, 0.6, 0.8;
  const M c = corrupt(ramp, Corruption::kContrast, 2, 2, 2, rng);
  for (Index j = 0; j < 4; ++j) CHECK(c(0, j) == doctest::Approx(0.5 + (ramp(0, j) - 0.5) * 0.8));
}

TEST_CASE("box blur of an impulse is the kernel average") {
  Rng rng(12);
  M img = M::Zero(1, 49);
  img(0, 3 * 7 + 3) = 1.0;
  for (int severity : {1, 3, 5}) {
    const Index w = blur_kernel(severity);
    const Index r = w / 2;
    const M out = corrupt(img, Corruption::kBoxBlur, severity, 7, 7, rng);
    for (Index i = 0; i < 7; ++i) {
      for (Index j = 0; j < 7; ++j) {
        const bool inside = std::abs(i - 3) <= r && std::abs(j - 3) <= r;
        CHECK(out(0, i * 7 + j) == doctest::Approx(inside ? 1.0 / double(w * w) : 0.0));
      }
    }
  }
}

TEST_CASE("noise corruptions are seeded, bounded and leave x untouched") {
  Rng src(13);
  const M x = random_matrix(4, 25, src, 0, 1);
  const M copy = x;
  for (auto kind : all_corruptions()) {
    for (int s = 1; s <= 5; ++s) {
      Rng a(14), b(14);
      const M c1 = corrupt(x, kind, s, 5, 5, a);
      CHECK(c1 == corrupt(x, kind, s, 5, 5, b));
      CHECK(c1.minCoeff() >= 0.0);
      CHECK(c1.maxCoeff() <= 1.0);
    }
  }
  CHECK(x == copy);
  Rng rng(15);
  CHECK_THROWS_AS(corrupt(x, Corruption::kBoxBlur, 6, 5, 5, rng), ConfigError);
  CHECK_THROWS_AS(corrupt(x, Corruption::kBoxBlur, 1, 4, 5, rng), DimensionError);
  CHECK_THROWS_AS(parse_corruption("fog"), ConfigError);
  CHECK(parse_corruption(to_string(Corruption::kImpulseNoise)) == Corruption::kImpulseNoise);
}

TEST_CASE("impulse rate scales with severity") {
  Rng rng(16);
  const M gray = M::Constant(1, 100000, 0.5);
  for (int s = 1; s <= 5; ++s) {
    const M c = corrupt(gray, Corruption::kImpulseNoise, s, 1, 100000, rng);
    const double rate = static_cast<double>((c.array() != 0.5).count()) / 100000.0;
    CHECK(rate == doctest::Approx(0.01 * s).epsilon(0.15));
  }
}
