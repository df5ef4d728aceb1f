/*
 * Copyright 2026 The mbsketch Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mbsketch/error.hpp"
#include "mbsketch/random.hpp"

namespace mbsketch::toy {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// FCA: concatenation. BLA: flattened outer product.
enum class FusionMode { kFca, kBla };

inline const char* to_string(FusionMode m) { return m == FusionMode::kFca ? "FCA" : "BLA"; }

inline FusionMode parse_fusion_mode(std::string name) {
  for (auto& c : name) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (name == "FCA") return FusionMode::kFca;
  if (name == "BLA") return FusionMode::kBla;
  throw ParameterError("unknown fusion mode '" + name + "' (expected FCA|BLA)");
}

inline std::size_t fused_dimension(std::size_t d_face, std::size_t d_iris, FusionMode mode) {
  return mode == FusionMode::kFca ? d_face + d_iris : d_face * d_iris;
}

/// Column-wise fusion; BLA element (a, b) lands at a * d_iris + b.
inline MatrixXd fuse(const MatrixXd& face, const MatrixXd& iris, FusionMode mode) {
  if (face.cols() != iris.cols()) throw ShapeError("face and iris batches differ in size");
  if (mode == FusionMode::kFca) {
    MatrixXd z(face.rows() + iris.rows(), face.cols());
    z << face, iris;
    return z;
  }
  MatrixXd z(face.rows() * iris.rows(), face.cols());
  for (Eigen::Index n = 0; n < face.cols(); ++n)
    for (Eigen::Index a = 0; a < face.rows(); ++a)
      z.col(n).segment(a * iris.rows(), iris.rows()) = face(a, n) * iris.col(n);
  return z;
}

inline VectorXd fuse(const VectorXd& face, const VectorXd& iris, FusionMode mode) {
  return fuse(MatrixXd(face), MatrixXd(iris), mode).col(0);
}

struct ToyShape {
  std::size_t input_face = 16;
  std::size_t input_iris = 16;
  std::size_t face = 8;    // encoder output d_f
  std::size_t iris = 8;    // encoder output d_i
  std::size_t hidden = 32;
  std::size_t code_bits = 32;  // J_toy
  std::size_t classes = 4;
  FusionMode mode = FusionMode::kFca;
};

struct LossWeights {
  double alpha = 8.0;
  double beta = 2.0;
  double gamma = 2.0;
  double lambda = 0.03;

  void validate() const {
    if (!(alpha >= 0 && beta >= 0 && gamma >= 0 && lambda >= 0)) throw ParameterError("loss weights must be >= 0");
  }
};

/// Trainable tensors. Biases are single-column matrices.
struct Parameters {
  MatrixXd enc_face, enc_iris;  // modality encoders
  MatrixXd w_joint, b_joint;
  MatrixXd w_hash, b_hash;
  MatrixXd w_cls, b_cls;

  static constexpr std::size_t kCount = 8;
  static constexpr std::array<const char*, kCount> kNames{"enc_face", "enc_iris", "w_joint", "b_joint",
                                                          "w_hash",   "b_hash",   "w_cls",   "b_cls"};
  static constexpr std::array<bool, kCount> kEncoder{true, true, false, false, false, false, false, false};
  static constexpr std::array<bool, kCount> kBias{false, false, false, true, false, true, false, true};

  std::array<MatrixXd*, kCount> tensors() {
    return {&enc_face, &enc_iris, &w_joint, &b_joint, &w_hash, &b_hash, &w_cls, &b_cls};
  }
  std::array<const MatrixXd*, kCount> tensors() const {
    return {&enc_face, &enc_iris, &w_joint, &b_joint, &w_hash, &b_hash, &w_cls, &b_cls};
  }

  Parameters zeros_like() const {
    Parameters z = *this;
    for (auto* m : z.tensors()) m->setZero();
    return z;
  }

  /// Sum of squares of every trainable value, biases included.
  double weight_norm2() const {
    double s = 0.0;
    for (const auto* m : tensors()) s += m->squaredNorm();
    return s;
  }
};

/*
 * face ─ enc_face ┐
 *                 ├ fuse ─ tanh(w_joint·z + b) ─ tanh(β_bw (w_hash·h + b)) ─ softmax(w_cls·o + b)
 * iris ─ enc_iris ┘
 */
struct ToyNetwork {
  ToyShape shape;
  Parameters params;
  double bandwidth = 1.0;  // β_bw

  static ToyNetwork create(const ToyShape& shape, std::uint64_t seed) {
    if (shape.face == 0 || shape.iris == 0 || shape.hidden == 0 || shape.code_bits == 0 || shape.classes < 2 ||
        shape.input_face == 0 || shape.input_iris == 0)
      throw ParameterError("toy network dimensions must be positive (and >= 2 classes)");
    Rng rng = make_rng(seed, {0x4e4554ULL});
    std::normal_distribution<double> normal(0.0, 1.0);
    auto init = [&](std::size_t rows, std::size_t cols) {
      MatrixXd m(rows, cols);
      const double scale = 1.0 / std::sqrt(static_cast<double>(cols));
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = scale * normal(rng);
      return m;
    };
    ToyNetwork net;
    net.shape = shape;
    auto& p = net.params;
    p.enc_face = init(shape.face, shape.input_face);
    p.enc_iris = init(shape.iris, shape.input_iris);
    p.w_joint = init(shape.hidden, fused_dimension(shape.face, shape.iris, shape.mode));
    p.b_joint = MatrixXd::Zero(shape.hidden, 1);
    p.w_hash = init(shape.code_bits, shape.hidden);
    p.b_hash = MatrixXd::Zero(shape.code_bits, 1);
    p.w_cls = init(shape.classes, shape.code_bits);
    p.b_cls = MatrixXd::Zero(shape.classes, 1);
    return net;
  }
};

/// Intermediate values of one forward pass; columns are samples.
struct Activations {
  MatrixXd face, iris, fused, hidden, hash_pre, hash, probs;
};

inline MatrixXd softmax_columns(const MatrixXd& logits) {
  MatrixXd p(logits.rows(), logits.cols());
  for (Eigen::Index n = 0; n < logits.cols(); ++n) {
    const VectorXd e = (logits.col(n).array() - logits.col(n).maxCoeff()).exp();
    p.col(n) = e / e.sum();
  }
  return p;
}

inline Activations forward(const ToyNetwork& net, const MatrixXd& x_face, const MatrixXd& x_iris) {
  const auto& p = net.params;
  if (x_face.rows() != p.enc_face.cols() || x_iris.rows() != p.enc_iris.cols())
    throw ShapeError("input dimension does not match the encoders");
  Activations a;
  a.face = p.enc_face * x_face;
  a.iris = p.enc_iris * x_iris;
  a.fused = fuse(a.face, a.iris, net.shape.mode);
  a.hidden = ((p.w_joint * a.fused).colwise() + p.b_joint.col(0)).array().tanh();
  a.hash_pre = (p.w_hash * a.hidden).colwise() + p.b_hash.col(0);
  a.hash = (net.bandwidth * a.hash_pre.array()).tanh();
  a.probs = softmax_columns((p.w_cls * a.hash).colwise() + p.b_cls.col(0));
  return a;
}

/// Hashing-layer outputs o, one column per sample.
inline MatrixXd hash_activations(const ToyNetwork& net, const MatrixXd& x_face, const MatrixXd& x_iris) {
  return forward(net, x_face, x_iris).hash;
}

// ---- losses ---------------------------------------------------------------

/// Mean cross-entropy plus lambda * sum of squared weights. Every prediction
/// column must be a distribution (sums to 1 within 1e-9).
inline double loss_classification(const MatrixXd& predictions, const std::vector<int>& labels, double weight_norm2,
                                  double lambda) {
  if (static_cast<std::size_t>(predictions.cols()) != labels.size())
    throw ShapeError("prediction count differs from label count");
  double ce = 0.0;
  for (Eigen::Index n = 0; n < predictions.cols(); ++n) {
    if (std::abs(predictions.col(n).sum() - 1.0) > 1e-9 || (predictions.col(n).array() < 0.0).any())
      throw ParameterError("prediction column " + std::to_string(n) + " is not a probability distribution");
    const int y = labels[static_cast<std::size_t>(n)];
    if (y < 0 || y >= predictions.rows()) throw ParameterError("label out of range");
    ce -= std::log(predictions(y, n));
  }
  const double mean = predictions.cols() ? ce / static_cast<double>(predictions.cols()) : 0.0;
  return mean + lambda * weight_norm2;
}

/// -(1/J) * sum over samples of ||o_n||^2.
inline double loss_binarization(const MatrixXd& activations) {
  if (activations.rows() == 0) return 0.0;
  return -activations.squaredNorm() / static_cast<double>(activations.rows());
}

/// Sum over samples of (mean of o_n)^2.
inline double loss_balance(const MatrixXd& activations) {
  if (activations.rows() == 0) return 0.0;
  return activations.colwise().mean().squaredNorm();
}

struct LossValue {
  double e1 = 0.0, e2 = 0.0, e3 = 0.0, total = 0.0;
};

struct LossAndGradient {
  LossValue value;
  Parameters gradient;
};

struct Batch {
  MatrixXd face;  // input_face x N
  MatrixXd iris;  // input_iris x N
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
};

/// alpha*E1 + beta*E2 + gamma*E3 and its exact gradient with respect to every tensor.
inline LossAndGradient total_loss(const Batch& batch, const ToyNetwork& net, const LossWeights& w) {
  const auto& p = net.params;
  const Activations a = forward(net, batch.face, batch.iris);
  const auto N = static_cast<double>(batch.size());
  const auto J = static_cast<double>(a.hash.rows());

  LossAndGradient out;
  out.value.e1 = loss_classification(a.probs, batch.labels, p.weight_norm2(), w.lambda);
  out.value.e2 = loss_binarization(a.hash);
  out.value.e3 = loss_balance(a.hash);
  out.value.total = w.alpha * out.value.e1 + w.beta * out.value.e2 + w.gamma * out.value.e3;

  Parameters& g = out.gradient;
  g = p.zeros_like();

  MatrixXd d_logits = a.probs;
  for (std::size_t n = 0; n < batch.size(); ++n) d_logits(batch.labels[n], static_cast<Eigen::Index>(n)) -= 1.0;
  d_logits *= w.alpha / N;
  g.w_cls = d_logits * a.hash.transpose();
  g.b_cls = d_logits.rowwise().sum();

  MatrixXd d_hash = p.w_cls.transpose() * d_logits;
  d_hash += (-2.0 * w.beta / J) * a.hash;
  const Eigen::RowVectorXd means = a.hash.colwise().mean();
  d_hash.rowwise() += (2.0 * w.gamma / J) * means;

  const MatrixXd d_pre = (d_hash.array() * net.bandwidth * (1.0 - a.hash.array().square())).matrix();
  g.w_hash = d_pre * a.hidden.transpose();
  g.b_hash = d_pre.rowwise().sum();

  const MatrixXd d_hid = ((p.w_hash.transpose() * d_pre).array() * (1.0 - a.hidden.array().square())).matrix();
  g.w_joint = d_hid * a.fused.transpose();
  g.b_joint = d_hid.rowwise().sum();

  const MatrixXd d_fused = p.w_joint.transpose() * d_hid;
  MatrixXd d_face, d_iris;
  if (net.shape.mode == FusionMode::kFca) {
    d_face = d_fused.topRows(a.face.rows());
    d_iris = d_fused.bottomRows(a.iris.rows());
  } else {
    d_face.resize(a.face.rows(), a.face.cols());
    d_iris = MatrixXd::Zero(a.iris.rows(), a.iris.cols());
    for (Eigen::Index n = 0; n < a.face.cols(); ++n)
      for (Eigen::Index r = 0; r < a.face.rows(); ++r) {
        const auto block = d_fused.col(n).segment(r * a.iris.rows(), a.iris.rows());
        d_face(r, n) = block.dot(a.iris.col(n));
        d_iris.col(n) += a.face(r, n) * block;
      }
  }
  g.enc_face = d_face * batch.face.transpose();
  g.enc_iris = d_iris * batch.iris.transpose();

  const double reg = 2.0 * w.alpha * w.lambda;
  const auto gs = g.tensors();
  const auto ps = p.tensors();
  for (std::size_t i = 0; i < Parameters::kCount; ++i) *gs[i] += reg * *ps[i];
  return out;
}

/// Worst per-tensor relative error ||g_a - g_n|| / (||g_a|| + ||g_n||) against
/// central differences with step h.
inline double gradient_check(const Batch& batch, const ToyNetwork& net, const LossWeights& w, double h = 1e-5) {
  const Parameters analytic = total_loss(batch, net, w).gradient;
  ToyNetwork probe = net;
  const auto probe_tensors = probe.params.tensors();
  const auto analytic_tensors = analytic.tensors();
  double worst = 0.0;
  for (std::size_t t = 0; t < Parameters::kCount; ++t) {
    MatrixXd& m = *probe_tensors[t];
    MatrixXd numeric(m.rows(), m.cols());
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      const double keep = m.data()[i];
      m.data()[i] = keep + h;
      const double up = total_loss(batch, probe, w).value.total;
      m.data()[i] = keep - h;
      const double down = total_loss(batch, probe, w).value.total;
      m.data()[i] = keep;
      numeric.data()[i] = (up - down) / (2.0 * h);
    }
    const double denom = analytic_tensors[t]->norm() + numeric.norm();
    if (denom > 0.0) worst = std::max(worst, (*analytic_tensors[t] - numeric).norm() / denom);
  }
  return worst;
}

/// Binary readout: bit = 1 when the activation is >= 0 (sign, zero mapped to +1).
inline std::vector<std::uint8_t> binarize(const VectorXd& activation) {
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(activation.size()));
  for (Eigen::Index i = 0; i < activation.size(); ++i) bits[static_cast<std::size_t>(i)] = activation(i) >= 0.0;
  return bits;
}

/// Mean |o| over every activation.
inline double mean_abs_activation(const MatrixXd& o) { return o.size() ? o.cwiseAbs().mean() : 0.0; }

/// Mean over samples of |mean(o_n)|.
inline double mean_balance(const MatrixXd& o) { return o.size() ? o.colwise().mean().cwiseAbs().mean() : 0.0; }

}  // namespace mbsketch::toy
