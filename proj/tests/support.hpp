#ifndef FOMO_TESTS_SUPPORT_HPP
#define FOMO_TESTS_SUPPORT_HPP

#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "fomo/model.hpp"

namespace fomo::testing {

template <typename Scalar = double>
Matrix<Scalar> random_matrix(Index rows, Index cols, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix<Scalar> m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<Scalar>(u(rng));
  return m;
}

inline std::vector<int> random_labels(Index n, int k, Rng& rng) {
  std::uniform_int_distribution<int> u(0, k - 1);
  std::vector<int> y(static_cast<std::size_t>(n));
  for (auto& v : y) v = u(rng);
  return y;
}

/// Largest tensor-wise relative error ||g - g_fd|| / max(||g||, ||g_fd||, 1e-12)
/// between the analytic gradients and central differences of `loss`.
inline double max_gradient_error(std::vector<Tensor<double>> params, const std::function<double()>& loss,
                                 double h = 1e-5) {
  double worst = 0.0;
  for (auto& p : params) {
    Matrix<double> fd(p.rows(), p.cols());
    auto& v = p.value();
    for (Index k = 0; k < v.size(); ++k) {
      const double saved = v.data()[k];
      v.data()[k] = saved + h;
      const double up = loss();
      v.data()[k] = saved - h;
      const double down = loss();
      v.data()[k] = saved;
      fd.data()[k] = (up - down) / (2 * h);
    }
    const double denom = std::max({p.grad().norm(), fd.norm(), 1e-12});
    worst = std::max(worst, (p.grad() - fd).norm() / denom);
  }
  return worst;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("fomo-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fomo::testing

#endif  // FOMO_TESTS_SUPPORT_HPP
