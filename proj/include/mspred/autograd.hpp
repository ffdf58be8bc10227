// Copyright (c) 2026 The mspred-cpp authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <memory>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "mspred/tensor.hpp"

namespace mspred::nn {

using mspred::TensorT;

// Reverse-mode tape. Each operation creates a node holding its output value,
// edges to its inputs, and a closure that scatters the node's gradient into
// the inputs' gradients. Graphs are built per rollout and freed when the
// output variables go out of scope; parameters are long-lived leaves.
template <class T>
struct NodeT {
  TensorT<T> value;
  TensorT<T> grad;
  std::vector<std::shared_ptr<NodeT>> parents;
  std::function<void()> backprop;
  bool requires_grad = false;
  std::string name;

  void ensure_grad() {
    if (grad.size() != value.size()) grad = TensorT<T>(value.shape());
  }

  void zero_grad() {
    if (grad.size()) grad.fill(T(0));
  }
};

template <class T>
using VarT = std::shared_ptr<NodeT<T>>;

inline bool& grad_enabled() {
  thread_local bool enabled = true;
  return enabled;
}

// RAII guard: operations created inside record no tape (value-only nodes).
struct NoGradGuard {
  NoGradGuard() : prev_(grad_enabled()) { grad_enabled() = false; }
  ~NoGradGuard() { grad_enabled() = prev_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

template <class T>
VarT<T> constant(TensorT<T> value, std::string name = "") {
  auto node = std::make_shared<NodeT<T>>();
  node->value = std::move(value);
  node->name = std::move(name);
  return node;
}

// Trainable leaf.
template <class T>
VarT<T> parameter(TensorT<T> value, std::string name = "") {
  auto node = std::make_shared<NodeT<T>>();
  node->value = std::move(value);
  node->requires_grad = true;
  node->name = std::move(name);
  return node;
}

// Creates an op node. The backprop closure is dropped entirely when no input
// requires a gradient (or inside NoGradGuard), so inference builds no tape.
template <class T>
VarT<T> make_op(TensorT<T> value, std::vector<VarT<T>> parents,
                std::function<void()> backprop) {
  auto node = std::make_shared<NodeT<T>>();
  node->value = std::move(value);
  bool needs = false;
  if (grad_enabled())
    for (const auto& p : parents)
      if (p && p->requires_grad) {
        needs = true;
        break;
      }
  if (needs) {
    node->requires_grad = true;
    node->parents = std::move(parents);
    node->backprop = std::move(backprop);
  }
  return node;
}

// Reverse accumulation from a scalar root. Iterative post-order topological
// sort; gradients accumulate (+=) so shared subexpressions and parameter
// reuse across timesteps are handled naturally.
//
// With release=true (default) each op node's value, gradient, and tape edges
// are dropped as soon as its closure has run: in reverse topological order
// every consumer has already finished, so nothing reads them afterwards. This
// roughly halves peak memory on long rollouts. Leaf parameters are never
// released; their accumulated gradients are the result of the call.
template <class T>
void backward(const VarT<T>& root, bool release = true) {
  if (root->value.size() != 1)
    throw ShapeError("backward requires a scalar root, got " +
                     root->value.shape_str());
  if (!root->requires_grad) return;

  std::vector<NodeT<T>*> order;
  // Strong references keep every visited node alive: release mode severs
  // graph edges while the reverse sweep is still walking over `order`.
  std::vector<VarT<T>> refs;
  std::unordered_set<NodeT<T>*> visited;
  std::vector<std::pair<NodeT<T>*, std::size_t>> stack;
  stack.emplace_back(root.get(), 0);
  visited.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      const VarT<T>& parent = node->parents[next++];
      if (parent && parent->requires_grad && !visited.count(parent.get())) {
        visited.insert(parent.get());
        refs.push_back(parent);
        stack.emplace_back(parent.get(), 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root->ensure_grad();
  root->grad.fill(T(1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    NodeT<T>* node = *it;
    if (node->backprop) {
      node->backprop();
      if (release) {
        node->value = TensorT<T>();
        node->grad = TensorT<T>();
        node->parents.clear();
        node->backprop = nullptr;
      }
    }
  }
}

}  // namespace mspred::nn
