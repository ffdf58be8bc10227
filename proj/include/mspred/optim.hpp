// Copyright (c) 2026 The mspred-cpp authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "mspred/common.hpp"
#include "mspred/layers.hpp"

namespace mspred::train {

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const {
    if (!(lr >= 0.0) || !std::isfinite(lr))
      throw ConfigError("learning rate must be finite and >= 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
      throw ConfigError("Adam betas must lie in [0, 1)");
    if (!(eps > 0.0)) throw ConfigError("Adam eps must be positive");
  }
};

template <class T>
class Adam {
 public:
  Adam(nn::NamedParams<T> params, AdamConfig cfg)
      : params_(std::move(params)), cfg_(cfg) {
    cfg_.validate();
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const auto& [name, p] : params_) {
      m_.emplace_back(p->value.shape());
      v_.emplace_back(p->value.shape());
    }
  }

  const nn::NamedParams<T>& params() const { return params_; }
  const AdamConfig& config() const { return cfg_; }
  long step_count() const { return t_; }

  void zero_grad() {
    for (auto& [name, p] : params_) p->zero_grad();
  }

  // Global l2 norm of all parameter gradients.
  double grad_norm() const {
    double acc = 0.0;
    for (const auto& [name, p] : params_) {
      if (p->grad.empty()) continue;
      for (std::size_t i = 0; i < p->grad.size(); ++i) {
        const double g = static_cast<double>(p->grad[i]);
        acc += g * g;
      }
    }
    return std::sqrt(acc);
  }

  void step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params_.size(); ++k) {
      auto& p = params_[k].second;
      if (p->grad.empty()) continue;
      T* w = p->value.data();
      const T* g = p->grad.data();
      T* m = m_[k].data();
      T* v = v_[k].data();
      const std::size_t n = p->value.size();
      for (std::size_t i = 0; i < n; ++i) {
        const double gi = static_cast<double>(g[i]);
        const double mi =
            cfg_.beta1 * static_cast<double>(m[i]) + (1.0 - cfg_.beta1) * gi;
        const double vi = cfg_.beta2 * static_cast<double>(v[i]) +
                          (1.0 - cfg_.beta2) * gi * gi;
        m[i] = static_cast<T>(mi);
        v[i] = static_cast<T>(vi);
        const double update =
            cfg_.lr * (mi / bc1) / (std::sqrt(vi / bc2) + cfg_.eps);
        w[i] = static_cast<T>(static_cast<double>(w[i]) - update);
      }
    }
  }

  // Checkpoint access to the raw moment buffers.
  std::vector<TensorT<T>>& moments_m() { return m_; }
  std::vector<TensorT<T>>& moments_v() { return v_; }
  const std::vector<TensorT<T>>& moments_m() const { return m_; }
  const std::vector<TensorT<T>>& moments_v() const { return v_; }
  void set_step_count(long t) { t_ = t; }

 private:
  nn::NamedParams<T> params_;
  AdamConfig cfg_;
  std::vector<TensorT<T>> m_;
  std::vector<TensorT<T>> v_;
  long t_ = 0;
};

}  // namespace mspred::train
