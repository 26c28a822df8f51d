#pragma once

#include <cstddef>
#include <vector>

#include "rnarl/mlp.hpp"

namespace rnarl {

// true marks a slot that must never be chosen (a self-flip).
using ActionMask = std::vector<bool>;

struct LossResult {
  double loss = 0.0;
  Matrix grad;  // d(loss)/d(network outputs), same shape as the outputs
};

// mean_b w_b * (q[b, slot_b] - target_b)^2
LossResult td_loss(const Matrix& q, const std::vector<std::size_t>& slots,
                   const std::vector<double>& targets,
                   const std::vector<double>& weights);

// mean_b (v_b - return_b)^2 over a batch x 1 output.
LossResult value_loss(const Matrix& values, const std::vector<double>& returns);

// Log-probabilities of a softmax restricted to unmasked slots; masked slots
// get -inf.
Vector masked_log_softmax(const Eigen::Ref<const Vector>& logits,
                          const ActionMask& mask);

struct PolicyLossResult {
  double loss = 0.0;
  Matrix grad;
  double mean_entropy = 0.0;
  double clip_fraction = 0.0;
};

// -mean(min(rho*A, clip(rho, 1-c, 1+c)*A)) - entropy_coef * mean(entropy)
PolicyLossResult clipped_surrogate_loss(const Matrix& logits,
                                        const std::vector<ActionMask>& masks,
                                        const std::vector<std::size_t>& slots,
                                        const std::vector<double>& old_log_probs,
                                        const std::vector<double>& advantages,
                                        double clip_ratio, double entropy_coef);

// REINFORCE with baseline: -mean(A * log pi(a|s)).
LossResult policy_gradient_loss(const Matrix& logits,
                                const std::vector<ActionMask>& masks,
                                const std::vector<std::size_t>& slots,
                                const std::vector<double>& advantages);

// KL(p || q) over unmasked slots, given log-probabilities.
double masked_kl(const Vector& log_p, const Vector& log_q,
                 const ActionMask& mask);

}  // namespace rnarl
