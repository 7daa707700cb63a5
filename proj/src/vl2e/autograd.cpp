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

#include "affectlink/vl2e/autograd.hpp"

#include "affectlink/error.hpp"

namespace affectlink::vl2e {
namespace {

template <typename Scalar>
const Tensor<Scalar>& Lookup(const ModelParams<Scalar>& params, const std::string& name) {
  auto it = params.find(name);
  if (it == params.end()) {
    throw Error(ErrorCode::kModelFormatError, "missing parameter tensor " + name);
  }
  return it->second;
}

}  // namespace

template <typename Scalar>
typename Tape<Scalar>::Var Tape<Scalar>::Param(const std::string& name) {
  const Tensor<Scalar>& t = Lookup(params_, name);
  const int rows = t.shape.size() >= 2 ? t.shape[0] : 1;
  const int cols = t.shape.empty() ? 1 : t.shape.back();
  Mat value = Eigen::Map<const Mat>(t.data.data(), rows, cols);
  const Var out = Push(std::move(value), true);
  if (grads_ != nullptr) {
    nodes_[out].backward = [this, out, name] {
      Tensor<Scalar>& g = grads_->at(name);
      Eigen::Map<Mat>(g.data.data(), nodes_[out].grad.rows(), nodes_[out].grad.cols()) +=
          nodes_[out].grad;
    };
  }
  return out;
}

template <typename Scalar>
typename Tape<Scalar>::Var Tape<Scalar>::GatherRows(const std::string& name,
                                                    std::span<const int> ids) {
  const Tensor<Scalar>& t = Lookup(params_, name);
  const int rows = t.rows();
  const int cols = t.cols();
  Mat value(static_cast<Eigen::Index>(ids.size()), cols);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= rows) {
      throw Error(ErrorCode::kConfigError,
                  "row " + std::to_string(ids[i]) + " out of range for " + name);
    }
    value.row(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const Mat>(t.data.data() + static_cast<std::size_t>(ids[i]) * cols, 1, cols);
  }
  const Var out = Push(std::move(value), true);
  if (grads_ != nullptr) {
    std::vector<int> rows_copy(ids.begin(), ids.end());
    nodes_[out].backward = [this, out, name, rows_copy = std::move(rows_copy), cols] {
      Tensor<Scalar>& g = grads_->at(name);
      const Mat& dy = nodes_[out].grad;
      for (std::size_t i = 0; i < rows_copy.size(); ++i) {
        Eigen::Map<Mat>(g.data.data() + static_cast<std::size_t>(rows_copy[i]) * cols, 1, cols) +=
            dy.row(static_cast<Eigen::Index>(i));
      }
    };
  }
  return out;
}

template <typename Scalar>
typename Tape<Scalar>::Var Tape<Scalar>::MatMul(Var a, Var b) {
  const Var out = Push(nodes_[a].value * nodes_[b].value, AnyTracks({a, b}));
  if (Tracks(out)) {
    nodes_[out].backward = [this, out, a, b] {
      const Mat& dy = nodes_[out].grad;
      if (Tracks(a)) GradOf(a).noalias() += dy * nodes_[b].value.transpose();
      if (Tracks(b)) GradOf(b).noalias() += nodes_[a].value.transpose() * dy;
    };
  }
  return out;
}

template <typename Scalar>
typename Tape<Scalar>::Var Tape<Scalar>::MatMulNT(Var a, Var b) {
  const Var out = Push(nodes_[a].value * nodes_[b].value.transpose(), AnyTracks({a, b}));
  if (Tracks(out)) {
    nodes_[out].backward = [this, out, a, b] {
      const Mat& dy = nodes_[out].grad;
      if (Tracks(a)) GradOf(a).noalias() += dy * nodes_[b].value;
      if (Tracks(b)) GradOf(b).noalias() += dy.transpose() * nodes_[a].value;
    };
  }
  return out;
}

template <typename Scalar>
typename Tape<Scalar>::Var Tape<Scalar>::Add(Var a, Var b) {
  const Var out = Push(nodes_[a].value + nodes_[b].value, AnyTracks({a, b}));
  if (Tracks(out)) {
    nodes_[out].backward = [this, out, a, b] {
      const Mat& dy = nodes_[out].grad;
      if (Tracks(a)) GradOf(a) += dy;
      if (Tracks(b)) GradOf(b) += dy;
    };
  }
  return out;
}

template <typename Scalar>
typename Tape<Scalar>::Var Tape<Scalar>::AddRow(Var x, Var b) {
  Mat value = nodes_[x].value;
  value.rowwise() += nodes_[b].value.row(0);
  const Var out = Push(std::move(value), AnyTracks({x, b}));
  if (Tracks(out)) {
    nodes_[out].backward = [this, out, x, b] {
      const Mat& dy = nodes_[out].grad;
      if (Tracks(x)) GradOf(x) += dy;
      if (Tracks(b)) GradOf(b) += dy.colwise().sum();
    };
  }
  return out;
}

template <typename Scalar>
typename Tape<Scalar>::Var Tape<Scalar>::Scale(Var x, Scalar s) {
  const Var out = Push(nodes_[x].value * s, AnyTracks({x}));
  if (Tracks(out)) {
    nodes_[out].backward = [this, out, x, s] { GradOf(x) += nodes_[out].grad * s; };
  }
  return out;
}

template <typename Scalar>
typename Tape<Scalar>::Var Tape<Scalar>::Gelu(Var x) {
  // tanh approximation
  const Scalar c = static_cast<Scalar>(std::sqrt(2.0 / 3.14159265358979323846));
  const Scalar k = static_cast<Scalar>(0.044715);
  const Mat& in = nodes_[x].value;
  Mat value(in.rows(), in.cols());
  for (Eigen::Index i = 0; i < in.size(); ++i) {
    const Scalar v = in.data()[i];
    value.data()[i] = Scalar(0.5) * v * (Scalar(1) + std::tanh(c * (v + k * v * v * v)));
  }
  const Var out = Push(std::move(value), AnyTracks({x}));
  if (Tracks(out)) {
    nodes_[out].backward = [this, out, x, c, k] {
      const Mat& in = nodes_[x].value;
      const Mat& dy = nodes_[out].grad;
      Mat& dx = GradOf(x);
      for (Eigen::Index i = 0; i < in.size(); ++i) {
        const Scalar v = in.data()[i];
        const Scalar t = std::tanh(c * (v + k * v * v * v));
        const Scalar dt = (Scalar(1) - t * t) * c * (Scalar(1) + Scalar(3) * k * v * v);
        dx.data()[i] += dy.data()[i] * (Scalar(0.5) * (Scalar(1) + t) + Scalar(0.5) * v * dt);
      }
    };
  }
  return out;
}

template <typename Scalar>
typename Tape<Scalar>::Var Tape<Scalar>::SoftmaxRows(Var x) {
  const Mat& in = nodes_[x].value;
  Mat value(in.rows(), in.cols());
  for (Eigen::Index r = 0; r < in.rows(); ++r) {
    const Scalar mx = in.row(r).maxCoeff();
    value.row(r) = (in.row(r).array() - mx).exp();
    value.row(r) /= value.row(r).sum();
  }
  const Var out = Push(std::move(value), AnyTracks({x}));
  if (Tracks(out)) {
    nodes_[out].backward = [this, out, x] {
      const Mat& y = nodes_[out].value;
      const Mat& dy = nodes_[out].grad;
      Mat& dx = GradOf(x);
      for (Eigen::Index r = 0; r < y.rows(); ++r) {
        const Scalar dot = y.row(r).dot(dy.row(r));
        dx.row(r).array() += y.row(r).array() * (dy.row(r).array() - dot);
      }
    };
  }
  return out;
}

template <typename Scalar>
typename Tape<Scalar>::Var Tape<Scalar>::LayerNorm(Var x, Var gamma, Var beta, Scalar eps) {
  const Mat& in = nodes_[x].value;
  const Eigen::Index n = in.rows();
  const Eigen::Index d = in.cols();
  Mat xhat(n, d);
  std::vector<Scalar> inv_std(static_cast<std::size_t>(n));
  for (Eigen::Index r = 0; r < n; ++r) {
    const Scalar mean = in.row(r).mean();
    const Scalar var = (in.row(r).array() - mean).square().mean();
    inv_std[static_cast<std::size_t>(r)] = Scalar(1) / std::sqrt(var + eps);
    xhat.row(r) = (in.row(r).array() - mean) * inv_std[static_cast<std::size_t>(r)];
  }
  Mat value = xhat;
  for (Eigen::Index r = 0; r < n; ++r) {
    value.row(r) = value.row(r).cwiseProduct(nodes_[gamma].value.row(0)) + nodes_[beta].value.row(0);
  }
  const Var out = Push(std::move(value), AnyTracks({x, gamma, beta}));
  if (Tracks(out)) {
    nodes_[out].backward = [this, out, x, gamma, beta, xhat = std::move(xhat),
                            inv_std = std::move(inv_std)] {
      const Mat& dy = nodes_[out].grad;
      if (Tracks(gamma)) GradOf(gamma) += dy.cwiseProduct(xhat).colwise().sum();
      if (Tracks(beta)) GradOf(beta) += dy.colwise().sum();
      if (Tracks(x)) {
        Mat& dx = GradOf(x);
        const auto& g = nodes_[gamma].value;
        for (Eigen::Index r = 0; r < dy.rows(); ++r) {
          const auto dxhat = (dy.row(r).cwiseProduct(g.row(0))).eval();
          const Scalar m1 = dxhat.mean();
          const Scalar m2 = dxhat.cwiseProduct(xhat.row(r)).mean();
          dx.row(r).array() += inv_std[static_cast<std::size_t>(r)] *
                               (dxhat.array() - m1 - xhat.row(r).array() * m2);
        }
      }
    };
  }
  return out;
}

template <typename Scalar>
typename Tape<Scalar>::Var Tape<Scalar>::MeanRows(Var x) {
  const Mat& in = nodes_[x].value;
  Mat value = in.colwise().mean();
  const Var out = Push(std::move(value), AnyTracks({x}));
  if (Tracks(out)) {
    nodes_[out].backward = [this, out, x] {
      const Mat& dy = nodes_[out].grad;
      Mat& dx = GradOf(x);
      const Scalar inv = Scalar(1) / static_cast<Scalar>(dx.rows());
      dx.rowwise() += dy.row(0) * inv;
    };
  }
  return out;
}

template <typename Scalar>
typename Tape<Scalar>::Var Tape<Scalar>::SliceCols(Var x, int begin, int count) {
  Mat value = nodes_[x].value.middleCols(begin, count);
  const Var out = Push(std::move(value), AnyTracks({x}));
  if (Tracks(out)) {
    nodes_[out].backward = [this, out, x, begin, count] {
      GradOf(x).middleCols(begin, count) += nodes_[out].grad;
    };
  }
  return out;
}

template <typename Scalar>
typename Tape<Scalar>::Var Tape<Scalar>::ConcatCols(std::span<const Var> parts) {
  Eigen::Index rows = nodes_[parts.front()].value.rows();
  Eigen::Index cols = 0;
  bool tracks = false;
  for (Var p : parts) {
    cols += nodes_[p].value.cols();
    tracks = tracks || Tracks(p);
  }
  Mat value(rows, cols);
  Eigen::Index at = 0;
  for (Var p : parts) {
    value.middleCols(at, nodes_[p].value.cols()) = nodes_[p].value;
    at += nodes_[p].value.cols();
  }
  const Var out = Push(std::move(value), tracks);
  if (Tracks(out)) {
    std::vector<Var> copy(parts.begin(), parts.end());
    nodes_[out].backward = [this, out, copy = std::move(copy)] {
      Eigen::Index at = 0;
      for (Var p : copy) {
        const Eigen::Index c = nodes_[p].value.cols();
        if (Tracks(p)) GradOf(p) += nodes_[out].grad.middleCols(at, c);
        at += c;
      }
    };
  }
  return out;
}

template <typename Scalar>
void Tape<Scalar>::Backward(Var v, const Mat& seed) {
  if (grads_ == nullptr) return;
  GradOf(v) += seed;
  for (Var i = v; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.backward && n.grad.size() != 0) n.backward();
  }
}

template class Tape<float>;
template class Tape<double>;

}  // namespace affectlink::vl2e
