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
#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "mbsketch/error.hpp"
#include "mbsketch/format.hpp"
#include "mbsketch/random.hpp"
#include "mbsketch/toy/dataset.hpp"
#include "mbsketch/toy/network.hpp"

namespace mbsketch::toy {

/// Hashing-layer bandwidths for the continuation, each stage trained until the
/// loss stops improving by `tolerance` over `patience` epochs.
struct ContinuationSchedule {
  std::vector<double> bandwidths{1, 2, 4, 8, 16};
  double tolerance = 1e-4;
  std::size_t patience = 5;
  std::size_t max_epochs = 200;

  void validate() const {
    if (bandwidths.empty() || bandwidths.front() != 1.0) throw ParameterError("continuation must start at 1");
    for (std::size_t i = 1; i < bandwidths.size(); ++i)
      if (!(bandwidths[i] > bandwidths[i - 1])) throw ParameterError("continuation bandwidths must increase");
    if (patience == 0 || max_epochs == 0) throw ParameterError("patience and max_epochs must be positive");
  }
};

struct TrainOptions {
  LossWeights weights;
  ContinuationSchedule schedule;
  double learning_rate = 0.01;
  double momentum = 0.9;
  double stage_decay = 0.9;     // learning rate multiplier after every stage
  double finetune_scale = 0.1;  // step 2 starts at learning_rate * finetune_scale
  std::size_t batch_size = 32;
  int steps = 2;  // 1: stop after the frozen-encoder step
  std::uint64_t seed = 0;
};

struct HistoryRow {
  int step = 1;
  std::size_t stage = 0;
  double bandwidth = 1.0;
  std::size_t epoch = 0;
  LossValue loss;
  double mean_abs_activation = 0.0;
  double balance = 0.0;
};

struct TrainResult {
  ToyNetwork network;
  std::vector<HistoryRow> history;
};

namespace detail {

struct Momentum {
  Parameters velocity;

  void step(Parameters& p, const Parameters& g, double lr, double mu, bool train_encoders) {
    const auto ws = p.tensors();
    const auto vs = velocity.tensors();
    const auto gs = g.tensors();
    for (std::size_t i = 0; i < Parameters::kCount; ++i) {
      if (Parameters::kEncoder[i] && !train_encoders) continue;
      *vs[i] = mu * *vs[i] - lr * *gs[i];
      *ws[i] += *vs[i];
    }
  }
};

inline HistoryRow evaluate(const ToyNetwork& net, const Batch& data, const LossWeights& w) {
  HistoryRow row;
  const Activations a = forward(net, data.face, data.iris);
  row.loss.e1 = loss_classification(a.probs, data.labels, net.params.weight_norm2(), w.lambda);
  row.loss.e2 = loss_binarization(a.hash);
  row.loss.e3 = loss_balance(a.hash);
  row.loss.total = w.alpha * row.loss.e1 + w.beta * row.loss.e2 + w.gamma * row.loss.e3;
  row.mean_abs_activation = mean_abs_activation(a.hash);
  row.balance = mean_balance(a.hash);
  return row;
}

}  // namespace detail

/*
 * Step 1 trains fusion, hashing and classifier with the encoders frozen; step 2
 * fine-tunes every tensor at a reduced rate. In each step the bandwidth walks
 * the schedule, and the learning rate decays after every stage.
 */
inline TrainResult train_two_step(const Batch& data, ToyNetwork net, const TrainOptions& opt) {
  opt.weights.validate();
  opt.schedule.validate();
  if (data.size() == 0) throw ParameterError("empty training set");
  const std::size_t batch = opt.batch_size == 0 ? data.size() : std::min(opt.batch_size, data.size());

  TrainResult result;
  if (opt.steps < 1 || opt.steps > 2) throw ParameterError("steps must be 1 or 2");
  for (int step = 1; step <= opt.steps; ++step) {
    double lr = step == 1 ? opt.learning_rate : opt.learning_rate * opt.finetune_scale;
    for (std::size_t stage = 0; stage < opt.schedule.bandwidths.size(); ++stage) {
      net.bandwidth = opt.schedule.bandwidths[stage];
      detail::Momentum mom{net.params.zeros_like()};
      std::vector<double> totals;
      for (std::size_t epoch = 0; epoch < opt.schedule.max_epochs; ++epoch) {
        std::vector<std::size_t> order(data.size());
        std::iota(order.begin(), order.end(), 0);
        Rng rng = make_rng(opt.seed, {static_cast<std::uint64_t>(step), stage, epoch});
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t lo = 0; lo < order.size(); lo += batch) {
          const std::vector<std::size_t> idx(order.begin() + static_cast<long>(lo),
                                             order.begin() + static_cast<long>(std::min(lo + batch, order.size())));
          const auto lg = total_loss(subset(data, idx), net, opt.weights);
          mom.step(net.params, lg.gradient, lr, opt.momentum, step == 2);
        }
        HistoryRow row = detail::evaluate(net, data, opt.weights);
        row.step = step;
        row.stage = stage;
        row.bandwidth = net.bandwidth;
        row.epoch = epoch;
        if (!std::isfinite(row.loss.total)) {
          std::ostringstream msg;
          msg << "loss diverged in step " << step << ", stage " << stage << " (bandwidth " << net.bandwidth
              << "), epoch " << epoch;
          throw DivergenceError(msg.str());
        }
        result.history.push_back(row);
        totals.push_back(row.loss.total);
        const std::size_t p = opt.schedule.patience;
        if (totals.size() > p && totals[totals.size() - 1 - p] - totals.back() < opt.schedule.tolerance) break;
      }
      lr *= opt.stage_decay;
    }
  }
  result.network = std::move(net);
  return result;
}

/// Training log as CSV; the first line echoes the loss weights.
inline std::string history_csv(const std::vector<HistoryRow>& rows, const LossWeights& w) {
  std::ostringstream os;
  os << "# weights: alpha=" << format_number(w.alpha) << " beta=" << format_number(w.beta)
     << " gamma=" << format_number(w.gamma) << " lambda=" << format_number(w.lambda) << '\n';
  os << "step,stage,epoch,bandwidth,E1,E2,E3,total,mean_abs_activation,balance\n";
  for (const auto& r : rows)
    os << r.step << ',' << r.stage << ',' << r.epoch << ',' << format_number(r.bandwidth) << ','
       << format_number(r.loss.e1) << ',' << format_number(r.loss.e2) << ',' << format_number(r.loss.e3) << ','
       << format_number(r.loss.total) << ',' << format_number(r.mean_abs_activation) << ','
       << format_number(r.balance) << '\n';
  return os.str();
}

}  // namespace mbsketch::toy
