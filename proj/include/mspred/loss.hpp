// Copyright (c) 2026 The mspred-cpp authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "mspred/common.hpp"
#include "mspred/model.hpp"
#include "mspred/ops.hpp"

namespace mspred::train {

struct LossWeights {
  double lambda1 = 1.0;
  double lambda2 = 1.0;

  void validate() const {
    if (!(lambda1 >= 0.0) || !std::isfinite(lambda1) || !(lambda2 >= 0.0) ||
        !std::isfinite(lambda2))
      throw ConfigError("loss weights must be finite and non-negative");
  }
};

// Targets aligned with the emission times of one rollout.
template <class T>
struct TargetSetT {
  std::vector<TensorT<T>> frames;
  std::vector<TensorT<T>> mids;
  std::vector<TensorT<T>> highs;
  std::vector<long> frame_times;
  std::vector<long> mid_times;
  std::vector<long> high_times;
};

using TargetSet = TargetSetT<float>;

template <class T>
struct LossTerms {
  nn::VarT<T> total;  // frame + lambda1 * mid + lambda2 * high
  nn::VarT<T> frame;  // unweighted components
  nn::VarT<T> mid;
  nn::VarT<T> high;
  double total_v = 0.0;
  double frame_v = 0.0;
  double mid_v = 0.0;
  double high_v = 0.0;
};

namespace detail {

inline void check_aligned(const std::vector<long>& got,
                          const std::vector<long>& want,
                          const char* head) {
  if (got == want) return;
  std::string msg = std::string("timestep misalignment in ") + head +
                    " targets at indices:";
  const std::size_t n = std::max(got.size(), want.size());
  for (std::size_t i = 0; i < n; ++i) {
    const long g = i < got.size() ? got[i] : -1;
    const long w = i < want.size() ? want[i] : -1;
    if (g != w)
      msg += " " + std::to_string(i) + " (prediction t=" + std::to_string(g) +
             ", target t=" + std::to_string(w) + ")";
  }
  throw ContractError(msg);
}

// Mean over the batch of per-sample squared errors, averaged over the
// emission count; `squared` false takes the per-sample root first.
template <class T>
nn::VarT<T> head_term(const std::vector<nn::VarT<T>>& preds,
                      const std::vector<TensorT<T>>& targets, bool squared) {
  if (preds.empty()) {
    TensorT<T> zero({1});
    return nn::constant<T>(std::move(zero));
  }
  std::vector<nn::VarT<T>> terms;
  terms.reserve(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    auto per_sample = nn::sum_sq_diff_rows(preds[i], targets[i]);
    if (!squared) per_sample = nn::sqrt_elem(per_sample);
    terms.push_back(nn::mean_all(per_sample));
  }
  return nn::scale(nn::sum_vars<T>(terms),
                   T(1) / static_cast<T>(preds.size()));
}

}  // namespace detail

// Per emission index, the error of each head is summed over one sample and
// averaged over the batch; indices are then averaged and heads combined as
// frame + lambda1 * mid + lambda2 * high. `squared` false uses the plain
// l2 norm instead of its square.
template <class T>
LossTerms<T> compute_loss(const nn::MultiScalePrediction<T>& pred,
                          const TargetSetT<T>& targets, const LossWeights& w,
                          bool squared = true) {
  w.validate();
  detail::check_aligned(pred.frame_times, targets.frame_times, "frame");
  detail::check_aligned(pred.mid_times, targets.mid_times, "mid");
  detail::check_aligned(pred.high_times, targets.high_times, "high");
  if (pred.frames.size() != targets.frames.size() ||
      pred.mids.size() != targets.mids.size() ||
      pred.highs.size() != targets.highs.size())
    throw ContractError("prediction/target emission counts differ");

  LossTerms<T> out;
  out.frame = detail::head_term<T>(pred.frames, targets.frames, squared);
  out.mid = detail::head_term<T>(pred.mids, targets.mids, squared);
  out.high = detail::head_term<T>(pred.highs, targets.highs, squared);
  out.total = nn::add(nn::add(out.frame,
                              nn::scale(out.mid, static_cast<T>(w.lambda1))),
                      nn::scale(out.high, static_cast<T>(w.lambda2)));
  out.frame_v = static_cast<double>(nn::scalar(out.frame));
  out.mid_v = static_cast<double>(nn::scalar(out.mid));
  out.high_v = static_cast<double>(nn::scalar(out.high));
  out.total_v = static_cast<double>(nn::scalar(out.total));
  return out;
}

}  // namespace mspred::train
