#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "doctest.h"
#include "json.hpp"
#include "support.hpp"

using fomo::testing::scratch_dir;
namespace fs = std::filesystem;

namespace {

int fomo_cli(const std::string& args) {
  const std::string cmd = std::string(FOMO_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

std::vector<std::string> lines(const fs::path& p) {
  std::vector<std::string> out;
  std::ifstream f(p);
  for (std::string l; std::getline(f, l);) out.push_back(l);
  return out;
}

std::vector<std::string> fields(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  for (std::string f; std::getline(ss, f, ',');) out.push_back(f);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

const char* kTinyConfig =
    "data.n = 300\n"
    "data.test_n = 150\n"
    "data.classes = 3\n"
    "model.hidden = 12,12\n"
    "train.epochs = 6\n"
    "train.lr_decay_epochs = 4\n"
    "train.batch_size = 64\n"
    "train.checkpoint_every = 3\n"
    "attack.epsilon = 0.05\n"
    "attack.step_size = 0.02\n"
    "attack.train_steps = 2\n"
    "attack.test_steps = 3\n"
    "fomo.warmup = 2\n"
    "fomo.relearn_epochs = 2\n"
    "fomo.sparsity = 0.2\n"
    "eval.epsilons = 0,0.02,0.05\n"
    "eval.sigmas = 0,0.1\n"
    "eval.trials = 2\n"
    "eval.severities = 0,1,3\n";

fs::path write_config(const fs::path& dir, const std::string& extra = {}) {
  const auto p = dir / "tiny.cfg";
  std::ofstream(p) << kTinyConfig << extra;
  return p;
}

}  // namespace

TEST_CASE("train writes metrics, checkpoints and summaries") {
  const auto dir = scratch_dir("cli-train");
  const auto cfg = write_config(dir);
  REQUIRE(fomo_cli("train --config " + cfg.string() + " --out " + (dir / "run").string()) == 0);
  const auto seed_dir = dir / "run" / "seed-0";
  const auto rows = lines(seed_dir / "metrics.csv");
  REQUIRE(rows.size() == 7);
  CHECK(rows[0] == "epoch,lr,nat_train,rob_train,nat_test,rob_test,loss_adv,loss_cr,event");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto f = fields(rows[i]);
    REQUIRE(f.size() == 9);
    CHECK(std::stoi(f[0]) == static_cast<int>(i));
    CHECK(f[8] == ((i == 4 || i == 6) ? "consolidate+forget" : ""));
  }
  CHECK(fs::exists(seed_dir / "epoch-003.ckpt"));
  CHECK(fs::exists(seed_dir / "epoch-006.ckpt"));
  CHECK(fs::exists(seed_dir / "last.ckpt"));
  CHECK(fs::exists(dir / "run" / "config-resolved.txt"));
  const auto summary = nlohmann::json::parse(slurp(dir / "run" / "summary.json"));
  CHECK(summary["mode"] == "fomo");
  CHECK(summary["seeds"].size() == 1);
  CHECK(summary["mean"]["delta"].get<double>() <= 0.0);

  // Rerunning from the resolved config reproduces the run.
  REQUIRE(fomo_cli("train --config " + (dir / "run" / "config-resolved.txt").string() + " --out " +
                   (dir / "rerun").string()) == 0);
  CHECK(slurp(dir / "rerun" / "seed-0" / "metrics.csv") == slurp(seed_dir / "metrics.csv"));
}

TEST_CASE("eval and sweep-eps on the last checkpoint reproduce the final record") {
  const auto dir = scratch_dir("cli-eval");
  const auto cfg = write_config(dir, "eval.epsilons = 0.05\n");
  REQUIRE(fomo_cli("train --config " + cfg.string() + " --out " + (dir / "run").string()) == 0);
  const auto seed_dir = dir / "run" / "seed-0";
  const auto last = fields(lines(seed_dir / "metrics.csv").back());
  REQUIRE(fomo_cli("eval --checkpoint " + (seed_dir / "last.ckpt").string()) == 0);
  const auto ev = nlohmann::json::parse(slurp(seed_dir / "eval.json"));
  CHECK(ev["natural"].get<double>() == std::stod(last[4]));
  CHECK(ev["robust"].get<double>() == std::stod(last[5]));
  CHECK(ev["epoch"] == 6);
  const auto summary = nlohmann::json::parse(slurp(seed_dir / "summary.json"));
  CHECK(ev["delta"].get<double>() == summary["delta"].get<double>());

  REQUIRE(fomo_cli("sweep-eps --checkpoint " + (seed_dir / "last.ckpt").string()) == 0);
  const auto sweep = lines(seed_dir / "sweep-eps.csv");
  REQUIRE(sweep.size() == 2);
  CHECK(std::stod(fields(sweep[1])[1]) == ev["robust"].get<double>());
}

TEST_CASE("probe, corrupt-eval and sweep-ablation emit their tables") {
  const auto dir = scratch_dir("cli-misc");
  const auto cfg = write_config(dir, "train.epochs = 3\ntrain.lr_decay_epochs = 2\n");
  REQUIRE(fomo_cli("train --config " + cfg.string() + " --out " + (dir / "run").string()) == 0);
  const auto ckpt = (dir / "run" / "seed-0" / "last.ckpt").string();
  REQUIRE(fomo_cli("probe --checkpoint " + ckpt + " --out " + (dir / "probe").string()) == 0);
  CHECK(lines(dir / "probe" / "probe.csv").size() == 3);
  REQUIRE(fomo_cli("sweep-eps --checkpoint " + ckpt + " --out " + (dir / "eps").string()) == 0);
  const auto eps = lines(dir / "eps" / "sweep-eps.csv");
  CHECK(eps.size() == 4);
  REQUIRE(fomo_cli("corrupt-eval --checkpoint " + ckpt + " --out " + (dir / "corr").string()) == 0);
  const auto corr = lines(dir / "corr" / "corruption.csv");
  CHECK(corr.size() == 1 + 5 * 3 + 1);
  CHECK(corr.back().rfind("mCA,,", 0) == 0);

  const auto grid = write_config(dir, "train.epochs = 3\ntrain.lr_decay_epochs = 2\nfomo.warmup = 1\n"
                                      "sweep.sparsity = 0.035,0.5\nsweep.relearn_epochs = 3,1\nrun.seeds = 0,1\n");
  REQUIRE(fomo_cli("sweep-ablation --config " + grid.string() + " --out " + (dir / "abl").string()) == 0);
  const auto abl = lines(dir / "abl" / "ablation.csv");
  CHECK(abl.size() == 1 + 4 * 3);
}

TEST_CASE("identical runs give identical metrics") {
  const auto dir = scratch_dir("cli-det");
  const auto cfg = write_config(dir);
  REQUIRE(fomo_cli("train --config " + cfg.string() + " --out " + (dir / "a").string()) == 0);
  REQUIRE(fomo_cli("train --config " + cfg.string() + " --out " + (dir / "b").string()) == 0);
  CHECK(slurp(dir / "a" / "seed-0" / "metrics.csv") == slurp(dir / "b" / "seed-0" / "metrics.csv"));
  REQUIRE(fomo_cli("train --config " + cfg.string() + " --seed 5 --out " + (dir / "c").string()) == 0);
  CHECK(slurp(dir / "a" / "seed-0" / "metrics.csv") != slurp(dir / "c" / "seed-5" / "metrics.csv"));
}

TEST_CASE("resume from a mid-run checkpoint matches the uninterrupted run") {
  const auto dir = scratch_dir("cli-resume");
  const auto cfg = write_config(dir);
  const auto run = dir / "run";
  REQUIRE(fomo_cli("train --config " + cfg.string() + " --out " + run.string()) == 0);
  const auto seed_dir = run / "seed-0";
  const auto full = slurp(seed_dir / "metrics.csv");
  const auto full_summary = slurp(seed_dir / "summary.json");

  // Pretend the process died after epoch 3.
  fs::copy_file(seed_dir / "epoch-003.ckpt", seed_dir / "last.ckpt", fs::copy_options::overwrite_existing);
  REQUIRE(fomo_cli("train --resume --config " + cfg.string() + " --out " + run.string()) == 0);
  CHECK(slurp(seed_dir / "metrics.csv") == full);
  CHECK(slurp(seed_dir / "summary.json") == full_summary);

  // A different configuration must not continue from this checkpoint.
  fs::copy_file(seed_dir / "epoch-003.ckpt", seed_dir / "last.ckpt", fs::copy_options::overwrite_existing);
  const auto other = write_config(dir, "train.lr = 0.2\n");
  CHECK(fomo_cli("train --resume --config " + other.string() + " --out " + run.string()) == 2);
}

TEST_CASE("exit codes") {
  const auto dir = scratch_dir("cli-exit");
  std::ofstream(dir / "bad.cfg") << "fomo.sparsity = 1.5\n";
  CHECK(fomo_cli("train --config " + (dir / "bad.cfg").string() + " --out " + (dir / "x").string()) == 2);
  std::ofstream(dir / "unknown.cfg") << "no.such = 1\n";
  CHECK(fomo_cli("train --config " + (dir / "unknown.cfg").string()) == 2);
  CHECK(fomo_cli("train --config " + (dir / "missing.cfg").string()) == 2);
  CHECK(fomo_cli("eval") == 2);
  CHECK(fomo_cli("eval --checkpoint " + (dir / "missing.ckpt").string()) == 2);
  CHECK(fomo_cli("") == 2);
  std::ofstream(dir / "junk.ckpt") << "not a checkpoint";
  CHECK(fomo_cli("eval --checkpoint " + (dir / "junk.ckpt").string()) == 3);
  CHECK(fomo_cli("--help") == 0);
}
