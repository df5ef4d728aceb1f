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

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mbsketch/error.hpp"
#include "mbsketch/feature_model.hpp"
#include "mbsketch/random.hpp"
#include "mbsketch/toy/network.hpp"

namespace mbsketch::toy {

struct ToyDataConfig {
  std::size_t classes = 4;
  std::size_t per_class = 32;
  std::size_t input_face = 16;
  std::size_t input_iris = 16;
  double separation = 3.0;  // std of class centers
  double noise = 1.0;       // within-class std
  std::uint64_t seed = 0;
};

/// Gaussian clusters: one center per class in each modality space, samples
/// scattered around it. Samples are ordered class-major.
inline Batch make_toy_dataset(const ToyDataConfig& cfg) {
  if (cfg.classes < 2 || cfg.per_class < 1 || cfg.input_face < 1 || cfg.input_iris < 1)
    throw ParameterError("toy dataset needs >= 2 classes, >= 1 sample per class and positive input sizes");
  if (!(cfg.separation > 0.0) || !(cfg.noise >= 0.0)) throw ParameterError("toy dataset spreads must be positive");
  Rng rng = make_rng(cfg.seed, {0x544f59ULL});
  std::normal_distribution<double> normal(0.0, 1.0);
  auto draw = [&](Eigen::Index rows, Eigen::Index cols, double scale) {
    MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = scale * normal(rng);
    return m;
  };
  const auto C = static_cast<Eigen::Index>(cfg.classes);
  const auto P = static_cast<Eigen::Index>(cfg.per_class);
  const MatrixXd face_centers = draw(static_cast<Eigen::Index>(cfg.input_face), C, cfg.separation);
  const MatrixXd iris_centers = draw(static_cast<Eigen::Index>(cfg.input_iris), C, cfg.separation);

  Batch b;
  b.face = draw(face_centers.rows(), C * P, cfg.noise);
  b.iris = draw(iris_centers.rows(), C * P, cfg.noise);
  for (Eigen::Index c = 0; c < C; ++c)
    for (Eigen::Index i = 0; i < P; ++i) {
      b.face.col(c * P + i) += face_centers.col(c);
      b.iris.col(c * P + i) += iris_centers.col(c);
      b.labels.push_back(static_cast<int>(c));
    }
  return b;
}

inline Batch subset(const Batch& b, const std::vector<std::size_t>& idx) {
  Batch out;
  out.face.resize(b.face.rows(), static_cast<Eigen::Index>(idx.size()));
  out.iris.resize(b.iris.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) {
    out.face.col(static_cast<Eigen::Index>(j)) = b.face.col(static_cast<Eigen::Index>(idx[j]));
    out.iris.col(static_cast<Eigen::Index>(j)) = b.iris.col(static_cast<Eigen::Index>(idx[j]));
    out.labels.push_back(b.labels[idx[j]]);
  }
  return out;
}

/*
 * Binary codes in feature-model form: subject = class (synthetic id), sample =
 * running index within the class. Ready for write_features / the pipeline.
 */
inline std::vector<FeatureVector> export_codes(const ToyNetwork& net, const Batch& data) {
  const MatrixXd o = hash_activations(net, data.face, data.iris);
  std::vector<FeatureVector> out;
  std::vector<std::size_t> seen;
  for (std::size_t n = 0; n < data.size(); ++n) {
    const auto label = static_cast<std::size_t>(data.labels[n]);
    if (seen.size() <= label) seen.resize(label + 1, 0);
    out.push_back(FeatureVector{synthetic_subject_id(label), std::to_string(seen[label]++),
                                binarize(o.col(static_cast<Eigen::Index>(n)))});
  }
  return out;
}

}  // namespace mbsketch::toy
