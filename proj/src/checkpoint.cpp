#include "fomo/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "json.hpp"

namespace fomo {
namespace {

constexpr std::array<char, 8> kMagic{'F', 'O', 'M', 'O', 'C', 'K', 'P', 'T'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  Reader(const std::vector<char>& buf, std::string source) : buf_(buf), source_(std::move(source)) {}

  void need(std::size_t n) const {
    if (pos_ + n > buf_.size()) throw FormatError(source_ + ": truncated checkpoint");
  }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{static_cast<unsigned char>(buf_[pos_ + i])} << (8 * i);
    pos_ += 4;
    return v;
  }

  std::string bytes(std::size_t n) {
    need(n);
    std::string s(buf_.data() + pos_, n);
    pos_ += n;
    return s;
  }

  std::vector<float> floats(std::size_t n) {
    std::vector<float> out(n);
    for (auto& f : out) f = std::bit_cast<float>(u32());
    return out;
  }

  bool done() const { return pos_ == buf_.size(); }

 private:
  const std::vector<char>& buf_;
  std::string source_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::size_t> parameter_sizes(const std::vector<Index>& widths) {
  std::vector<std::size_t> sizes;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    sizes.push_back(static_cast<std::size_t>(widths[i] * widths[i + 1]));
    sizes.push_back(static_cast<std::size_t>(widths[i + 1]));
  }
  return sizes;
}

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
  const auto sizes = parameter_sizes(c.widths);
  auto check = [&](const std::vector<std::vector<float>>& arrays, const char* what) {
    if (arrays.empty()) return;
    if (arrays.size() != sizes.size()) throw ContractError(std::string("checkpoint: wrong number of ") + what + " arrays");
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      if (arrays[i].size() != sizes[i]) throw ContractError(std::string("checkpoint: wrong ") + what + " array size");
    }
  };
  if (c.theta.empty()) throw ContractError("checkpoint: no parameters");
  check(c.theta, "theta");
  check(c.phi, "phi");
  check(c.velocity, "velocity");

  nlohmann::json meta = {
      {"widths", c.widths},
      {"epoch", c.epoch},
      {"seed", c.seed},
      {"config_hash", c.config_hash},
      {"mode", c.mode},
      {"rng_state", c.rng_state},
      {"has_stable", !c.phi.empty()},
      {"has_velocity", !c.velocity.empty()},
      {"best", {{"epoch", c.best.epoch}, {"rob_val", c.best.rob_val}, {"rob_test", c.best.rob_test},
                {"nat_test", c.best.nat_test}}},
      {"config", c.config_text},
  };
  const std::string doc = meta.dump();

  std::string out(kMagic.begin(), kMagic.end());
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(doc.size()));
  out += doc;
  for (const auto* group : {&c.theta, &c.phi, &c.velocity}) {
    for (const auto& arr : *group) {
      for (float f : arr) put_u32(out, std::bit_cast<std::uint32_t>(f));
    }
  }

  // Write-then-rename keeps a valid checkpoint on disk if the process dies mid-write.
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw FormatError("cannot write " + tmp.string());
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw FormatError("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot open checkpoint " + path.string());
  const std::vector<char> buf{std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
  Reader r(buf, path.string());

  if (r.bytes(8) != std::string(kMagic.begin(), kMagic.end())) throw FormatError(path.string() + ": bad magic");
  const auto version = r.u32();
  if (version != kCheckpointVersion) {
    throw FormatError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  }
  const auto doc_len = r.u32();
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(r.bytes(doc_len));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": bad metadata: " + e.what());
  }

  Checkpoint c;
  try {
    c.widths = meta.at("widths").get<std::vector<Index>>();
    c.epoch = meta.at("epoch").get<int>();
    c.seed = meta.at("seed").get<std::uint64_t>();
    c.config_hash = meta.at("config_hash").get<std::uint64_t>();
    c.mode = meta.at("mode").get<std::string>();
    c.rng_state = meta.at("rng_state").get<std::string>();
    const auto& best = meta.at("best");
    c.best = {best.at("epoch").get<int>(), best.at("rob_val").get<double>(), best.at("rob_test").get<double>(),
              best.at("nat_test").get<double>()};
    c.config_text = meta.at("config").get<std::string>();
    if (c.widths.size() < 2) throw FormatError(path.string() + ": layer spec needs at least two widths");
    for (auto w : c.widths) {
      if (w < 1) throw FormatError(path.string() + ": non-positive layer width");
    }
    const auto sizes = parameter_sizes(c.widths);
    auto read_group = [&](std::vector<std::vector<float>>& dst) {
      for (auto n : sizes) dst.push_back(r.floats(n));
    };
    read_group(c.theta);
    if (meta.at("has_stable").get<bool>()) read_group(c.phi);
    if (meta.at("has_velocity").get<bool>()) read_group(c.velocity);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": bad metadata: " + e.what());
  }
  if (!r.done()) throw FormatError(path.string() + ": trailing bytes after parameter arrays");
  return c;
}

}  // namespace fomo
