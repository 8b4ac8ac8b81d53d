#include <cmath>
#include <vector>

#include "doctest.h"
#include "fomo/attacks.hpp"
#include "support.hpp"

using namespace fomo;
using fomo::testing::random_labels;
using fomo::testing::random_matrix;
using M = Matrix<double>;
using T = Tensor<double>;

namespace {

double mean_loss(const Mlp<double>& net, const M& x, const std::vector<int>& y) {
  Tape<double> tape;
  return softmax_cross_entropy(tape, T(net.logits(x)), y).item();
}

AttackConfig unbounded(double eps, Norm norm, double step, int steps, bool random_start) {
  AttackConfig c;
  c.epsilon = eps;
  c.norm = norm;
  c.step_size = step;
  c.steps = steps;
  c.random_start = random_start;
  c.input_bounds.reset();
  return c;
}

}  // namespace

TEST_CASE("project hand cases") {
  M d(1, 2);
  d << 0.5, -0.5;
  M expect(1, 2);
  expect << 0.25, -0.25;
  CHECK(project<double>(d, 0.25, Norm::kLinf) == expect);

  M l2(1, 2);
  l2 << std::sqrt(2.0), std::sqrt(2.0);  // norm 2
  CHECK((project<double>(l2, 1.0, Norm::kL2) - l2 / 2).norm() < 1e-15);

  M inside(2, 3);
  inside << 0.1, -0.2, 0.05, 0.0, 0.3, -0.1;
  CHECK(project<double>(inside, 0.5, Norm::kLinf) == inside);
  CHECK(project<double>(inside, 0.5, Norm::kL2) == inside);
  CHECK_THROWS_AS(project<double>(inside, -0.1, Norm::kLinf), ConfigError);
  CHECK_THROWS_AS(parse_norm("l1"), ConfigError);
  CHECK(parse_norm("l2") == Norm::kL2);
}

TEST_CASE("epsilon zero is the identity") {
  Rng rng(1);
  auto net = Mlp<double>::init({5, 8, 3}, rng);
  const M x = random_matrix(4, 5, rng, 0, 1);
  const auto y = random_labels(4, 3, rng);
  for (Norm n : {Norm::kLinf, Norm::kL2}) {
    auto cfg = attack_preset("linf-train");
    cfg.norm = n;
    cfg.epsilon = 0.0;
    CHECK(pgd(net, x, y, cfg, rng) == x);
  }
  auto bad = attack_preset("linf-train");
  bad.epsilon = -0.1;
  CHECK_THROWS_AS(pgd(net, x, y, bad, rng), ConfigError);
}

TEST_CASE("one step on a linear two-class model is closed-form FGSM") {
  Rng rng(2);
  const M w = random_matrix(6, 2, rng);
  Mlp<double> net({{T(w), T::zeros(Shape{2})}});
  const M x = random_matrix(5, 6, rng);
  const std::vector<int> y{0, 1, 1, 0, 1};
  const double eps = 0.1;
  const M adv = pgd(net, x, y, unbounded(eps, Norm::kLinf, eps, 1, false), rng);
  // dCE/dx = (p1 - [y=1]) (w1 - w0): its sign is sign(w1 - w0) for y=0 and the reverse for y=1.
  for (Index i = 0; i < 5; ++i) {
    for (Index k = 0; k < 6; ++k) {
      const double dir = w(k, 1) - w(k, 0);
      const double sign = (dir > 0) - (dir < 0);
      const double expected = y[static_cast<std::size_t>(i)] == 0 ? eps * sign : -eps * sign;
      CHECK(adv(i, k) - x(i, k) == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("loss along the PGD trajectory is essentially non-decreasing") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(100 + seed);
    auto net = Mlp<double>::init({8, 16, 4}, rng);
    const M x = random_matrix(32, 8, rng, 0.2, 0.8);
    const auto y = random_labels(32, 4, rng);
    std::vector<double> losses;
    for (int k = 0; k <= 10; ++k) {
      Rng attack_rng(seed);
      const M adv =
          k == 0 ? x : pgd(net, x, y, unbounded(0.1, Norm::kLinf, 0.01, k, false), attack_rng);
      losses.push_back(mean_loss(net, adv, y));
    }
    int rising = 0;
    for (std::size_t i = 1; i < losses.size(); ++i) rising += losses[i] >= losses[i - 1];
    CHECK(rising >= 9);
  }
}

TEST_CASE("outputs stay in the ball and the input bounds") {
  Rng rng(3);
  auto net = Mlp<double>::init({10, 12, 3}, rng);
  const auto before = net.parameters()[0].value();
  for (int trial = 0; trial < 20; ++trial) {
    const M x = random_matrix(8, 10, rng, 0, 1);
    const M x_copy = x;
    const auto y = random_labels(8, 3, rng);
    for (const char* preset : {"linf-test", "l2-test", "mnist-linf"}) {
      auto cfg = attack_preset(preset);
      const M adv = pgd(net, x, y, cfg, rng);
      CHECK(adv.minCoeff() >= 0.0);
      CHECK(adv.maxCoeff() <= 1.0);
      const M d = adv - x;
      for (Index i = 0; i < d.rows(); ++i) {
        const double n = cfg.norm == Norm::kLinf ? d.row(i).cwiseAbs().maxCoeff() : d.row(i).norm();
        CHECK(n <= cfg.epsilon + 1e-9);
      }
    }
    CHECK(x == x_copy);
  }
  CHECK(net.parameters()[0].value() == before);
  for (const auto& p : net.parameters()) CHECK_FALSE(p.has_grad());
}

TEST_CASE("pgd is deterministic for a fixed seed") {
  Rng rng(4);
  auto net = Mlp<double>::init({6, 8, 2}, rng);
  const M x = random_matrix(10, 6, rng, 0, 1);
  const auto y = random_labels(10, 2, rng);
  for (const char* preset : {"linf-train", "l2-train"}) {
    Rng a(77), b(77);
    const auto cfg = attack_preset(preset);
    CHECK(pgd(net, x, y, cfg, a) == pgd(net, x, y, cfg, b));
  }
}

TEST_CASE("presets") {
  const auto lt = attack_preset("linf-test");
  CHECK(lt.epsilon == doctest::Approx(8.0 / 255));
  CHECK(lt.steps == 20);
  CHECK(lt.norm == Norm::kLinf);
  const auto ltr = attack_preset("linf-train");
  CHECK(ltr.steps == 10);
  CHECK(ltr.step_size == doctest::Approx(2.0 / 255));
  const auto l2 = attack_preset("l2-test");
  CHECK(l2.norm == Norm::kL2);
  CHECK(l2.epsilon == doctest::Approx(128.0 / 255));
  CHECK(l2.step_size == doctest::Approx(15.0 / 255));
  CHECK(attack_preset("l2-train").steps == 10);
  const auto mn = attack_preset("mnist-linf");
  CHECK(mn.epsilon == doctest::Approx(0.3));
  CHECK(mn.step_size == doctest::Approx(0.04));
  CHECK(mn.steps == 10);
  CHECK(attack_preset("mnist-linf-test").steps == 20);
  CHECK_THROWS_AS(attack_preset("cw"), ConfigError);
}

TEST_CASE("oversized steps only warn") {
  auto cfg = attack_preset("linf-train");
  CHECK(cfg.warnings().empty());
  cfg.step_size = 3 * cfg.epsilon;
  CHECK(cfg.warnings().size() == 1);
  CHECK_NOTHROW(cfg.validate());
  cfg.steps = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
