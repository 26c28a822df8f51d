#include "rnarl/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rnarl/errors.hpp"

namespace rnarl {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require_batch(std::size_t rows, std::size_t n, const char* what) {
  if (rows != n) {
    throw ShapeMismatch(std::string(what) + ": batch has " +
                        std::to_string(rows) + " rows but " +
                        std::to_string(n) + " entries");
  }
}

void require_slots(const std::vector<std::size_t>& slots, Eigen::Index width) {
  for (std::size_t slot : slots) {
    if (slot >= static_cast<std::size_t>(width)) {
      throw OutOfRange("action slot " + std::to_string(slot) +
                       " outside output width " + std::to_string(width));
    }
  }
}

}  // namespace

LossResult td_loss(const Matrix& q, const std::vector<std::size_t>& slots,
                   const std::vector<double>& targets,
                   const std::vector<double>& weights) {
  const auto batch = static_cast<std::size_t>(q.rows());
  require_batch(batch, slots.size(), "td_loss slots");
  require_batch(batch, targets.size(), "td_loss targets");
  require_batch(batch, weights.size(), "td_loss weights");
  require_slots(slots, q.cols());
  LossResult out{0.0, Matrix::Zero(q.rows(), q.cols())};
  if (batch == 0) return out;
  const double inv = 1.0 / static_cast<double>(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    const double diff = q(b, slots[b]) - targets[b];
    out.loss += weights[b] * diff * diff * inv;
    out.grad(b, slots[b]) = 2.0 * weights[b] * diff * inv;
  }
  return out;
}

LossResult value_loss(const Matrix& values, const std::vector<double>& returns) {
  const auto batch = static_cast<std::size_t>(values.rows());
  require_batch(batch, returns.size(), "value_loss");
  if (values.cols() != 1) throw ShapeMismatch("value head must be 1 wide");
  LossResult out{0.0, Matrix::Zero(values.rows(), 1)};
  if (batch == 0) return out;
  const double inv = 1.0 / static_cast<double>(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    const double diff = values(b, 0) - returns[b];
    out.loss += diff * diff * inv;
    out.grad(b, 0) = 2.0 * diff * inv;
  }
  return out;
}

Vector masked_log_softmax(const Eigen::Ref<const Vector>& logits,
                          const ActionMask& mask) {
  const auto n = static_cast<std::size_t>(logits.size());
  if (mask.size() != n) throw ShapeMismatch("mask width != logits width");
  double peak = kNegInf;
  for (std::size_t i = 0; i < n; ++i) {
    if (!mask[i]) peak = std::max(peak, logits[i]);
  }
  if (peak == kNegInf) throw Error("every action slot is masked");
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!mask[i]) z += std::exp(logits[i] - peak);
  }
  const double log_z = peak + std::log(z);
  Vector out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = mask[i] ? kNegInf : logits[i] - log_z;
  }
  return out;
}

PolicyLossResult clipped_surrogate_loss(const Matrix& logits,
                                        const std::vector<ActionMask>& masks,
                                        const std::vector<std::size_t>& slots,
                                        const std::vector<double>& old_log_probs,
                                        const std::vector<double>& advantages,
                                        double clip_ratio, double entropy_coef) {
  const auto batch = static_cast<std::size_t>(logits.rows());
  require_batch(batch, masks.size(), "surrogate masks");
  require_batch(batch, slots.size(), "surrogate slots");
  require_batch(batch, old_log_probs.size(), "surrogate old log-probs");
  require_batch(batch, advantages.size(), "surrogate advantages");
  require_slots(slots, logits.cols());
  PolicyLossResult out;
  out.grad = Matrix::Zero(logits.rows(), logits.cols());
  if (batch == 0) return out;
  const double inv = 1.0 / static_cast<double>(batch);
  std::size_t clipped = 0;

  for (std::size_t b = 0; b < batch; ++b) {
    const Vector logp = masked_log_softmax(logits.row(b).transpose(), masks[b]);
    const auto width = static_cast<std::size_t>(logp.size());
    const double ratio = std::exp(logp[slots[b]] - old_log_probs[b]);
    const double adv = advantages[b];
    const double bounded =
        std::clamp(ratio, 1.0 - clip_ratio, 1.0 + clip_ratio);
    const double unclipped_obj = ratio * adv;
    const double clipped_obj = bounded * adv;
    if (bounded != ratio) ++clipped;

    // The gradient flows through the ratio only when the unclipped branch
    // is the active minimum.
    double obj_ratio_grad = 0.0;
    double objective = unclipped_obj;
    if (unclipped_obj <= clipped_obj) {
      obj_ratio_grad = adv;
    } else {
      objective = clipped_obj;
    }
    out.loss -= objective * inv;

    double entropy = 0.0;
    for (std::size_t i = 0; i < width; ++i) {
      if (!masks[b][i]) entropy -= std::exp(logp[i]) * logp[i];
    }
    out.mean_entropy += entropy * inv;
    out.loss -= entropy_coef * entropy * inv;

    for (std::size_t i = 0; i < width; ++i) {
      if (masks[b][i]) continue;
      const double p = std::exp(logp[i]);
      const double onehot = i == slots[b] ? 1.0 : 0.0;
      // d ratio / d z_i = ratio * (1[i=a] - p_i)
      const double d_obj = obj_ratio_grad * ratio * (onehot - p);
      // d H / d z_i = -p_i * (log p_i + H)
      const double d_ent = -p * (logp[i] + entropy);
      out.grad(b, i) = -(d_obj + entropy_coef * d_ent) * inv;
    }
  }
  out.clip_fraction = static_cast<double>(clipped) * inv;
  return out;
}

LossResult policy_gradient_loss(const Matrix& logits,
                                const std::vector<ActionMask>& masks,
                                const std::vector<std::size_t>& slots,
                                const std::vector<double>& advantages) {
  const auto batch = static_cast<std::size_t>(logits.rows());
  require_batch(batch, masks.size(), "policy gradient masks");
  require_batch(batch, slots.size(), "policy gradient slots");
  require_batch(batch, advantages.size(), "policy gradient advantages");
  require_slots(slots, logits.cols());
  LossResult out{0.0, Matrix::Zero(logits.rows(), logits.cols())};
  if (batch == 0) return out;
  const double inv = 1.0 / static_cast<double>(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    const Vector logp = masked_log_softmax(logits.row(b).transpose(), masks[b]);
    out.loss -= advantages[b] * logp[slots[b]] * inv;
    for (Eigen::Index i = 0; i < logp.size(); ++i) {
      if (masks[b][i]) continue;
      const double onehot = static_cast<std::size_t>(i) == slots[b] ? 1.0 : 0.0;
      out.grad(b, i) = -advantages[b] * (onehot - std::exp(logp[i])) * inv;
    }
  }
  return out;
}

double masked_kl(const Vector& log_p, const Vector& log_q,
                 const ActionMask& mask) {
  double kl = 0.0;
  for (Eigen::Index i = 0; i < log_p.size(); ++i) {
    if (mask[i]) continue;
    kl += std::exp(log_p[i]) * (log_p[i] - log_q[i]);
  }
  return std::max(kl, 0.0);
}

}  // namespace rnarl
