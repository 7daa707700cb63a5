// Copyright 2026 The Affectlink Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef AFFECTLINK_VL2E_AUTOGRAD_HPP
#define AFFECTLINK_VL2E_AUTOGRAD_HPP

// Minimal reverse-mode tape over dense row-major matrices. Every op stores its
// forward value and a hand-written backward rule; parameter leaves accumulate
// their gradients into a caller-owned GradientMap.

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "affectlink/vl2e/tensor.hpp"

namespace affectlink::vl2e {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
class Tape {
 public:
  using Mat = Matrix<Scalar>;
  using Var = int;

  explicit Tape(const ModelParams<Scalar>& params, GradientMap<Scalar>* grads = nullptr)
      : params_(params), grads_(grads) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  const Mat& value(Var v) const { return nodes_[v].value; }
  std::size_t size() const { return nodes_.size(); }

  Var Constant(Mat value) { return Push(std::move(value), false); }

  // Parameter tensor viewed as [rows, cols] (rank-1 tensors become a row).
  Var Param(const std::string& name);

  // Rows `ids` of a parameter table; gradients scatter back into the table.
  Var GatherRows(const std::string& name, std::span<const int> ids);

  Var MatMul(Var a, Var b);
  // a * b^T
  Var MatMulNT(Var a, Var b);
  Var Add(Var a, Var b);
  // x + row vector b, broadcast over rows
  Var AddRow(Var x, Var b);
  Var Scale(Var x, Scalar s);
  Var Gelu(Var x);
  Var SoftmaxRows(Var x);
  Var LayerNorm(Var x, Var gamma, Var beta, Scalar eps = Scalar(1e-5));
  Var MeanRows(Var x);
  Var SliceCols(Var x, int begin, int count);
  Var ConcatCols(std::span<const Var> parts);

  // Seeds d(loss)/d(v) and runs every backward rule in reverse order.
  void Backward(Var v, const Mat& seed);

 private:
  struct Node {
    Mat value;
    Mat grad;
    bool requires_grad = false;
    std::function<void()> backward;
  };

  Var Push(Mat value, bool requires_grad) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    nodes_.push_back(std::move(n));
    return static_cast<Var>(nodes_.size() - 1);
  }
  bool Tracks(Var v) const { return grads_ != nullptr && nodes_[v].requires_grad; }
  Mat& GradOf(Var v) {
    Node& n = nodes_[v];
    if (n.grad.size() == 0) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
    return n.grad;
  }
  bool AnyTracks(std::initializer_list<Var> vs) const {
    for (Var v : vs) {
      if (Tracks(v)) return true;
    }
    return false;
  }

  const ModelParams<Scalar>& params_;
  GradientMap<Scalar>* grads_;
  std::vector<Node> nodes_;
};

}  // namespace affectlink::vl2e

#endif  // AFFECTLINK_VL2E_AUTOGRAD_HPP
