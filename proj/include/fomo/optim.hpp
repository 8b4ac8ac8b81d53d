#ifndef FOMO_OPTIM_HPP
#define FOMO_OPTIM_HPP

#include <span>
#include <vector>

#include "fomo/tensor.hpp"

namespace fomo {

/// Heavy-ball velocity buffers, one per parameter tensor in enumeration order.
template <typename Scalar>
struct SgdState {
  std::vector<Matrix<Scalar>> velocity;
};

/// v <- momentum * v + grad + weight_decay * param;  param <- param - lr * v
template <typename Scalar>
void sgd_step(std::span<Tensor<Scalar>> params, Scalar lr, Scalar momentum, Scalar weight_decay,
              SgdState<Scalar>& state) {
  if (state.velocity.empty()) {
    state.velocity.reserve(params.size());
    for (const auto& p : params) state.velocity.push_back(Matrix<Scalar>::Zero(p.rows(), p.cols()));
  }
  if (state.velocity.size() != params.size()) {
    throw ContractError("sgd_step: optimizer state tracks " + std::to_string(state.velocity.size()) +
                        " tensors, got " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].has_grad()) {
      throw ContractError("sgd_step: parameter " + std::to_string(i) + " has no gradient");
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    auto& v = state.velocity[i];
    v = momentum * v + p.grad() + weight_decay * p.value();
    p.value() -= lr * v;
  }
}

template <typename Scalar>
void zero_grad(std::span<Tensor<Scalar>> params) {
  for (auto& p : params) p.zero_grad();
}

}  // namespace fomo

#endif  // FOMO_OPTIM_HPP
