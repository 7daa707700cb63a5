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

#ifndef AFFECTLINK_HARNESS_METRICS_HPP
#define AFFECTLINK_HARNESS_METRICS_HPP

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "affectlink/empathy/emotion.hpp"

namespace affectlink::harness {

// confusion[gold][pred]
using ConfusionMatrix = std::array<std::array<std::uint64_t, kNumEmotions>, kNumEmotions>;

// Throws Error{kEvalError} on a length mismatch or a label outside 0..6.
ConfusionMatrix Confusion(const std::vector<int>& preds, const std::vector<int>& golds);

// Per-class F1; a class with no predictions and no support scores 0.
std::array<double, kNumEmotions> PerClassF1(const ConfusionMatrix& cm);

// Per-class F1 averaged with weights proportional to gold support. Classes
// without support carry zero weight. Empty input scores 0.
double WeightedF1(const std::vector<int>& preds, const std::vector<int>& golds);

using DialogueOutcome = std::pair<std::vector<int>, std::vector<int>>;  // (preds, golds)

// Mean over dialogues of the within-dialogue accuracy. Throws
// Error{kEvalError} for an empty list, an empty dialogue or a length mismatch.
double ResponseAccuracy(const std::vector<DialogueOutcome>& dialogues);

struct DialogueAccuracy {
  int dialogue = 0;
  std::size_t turns = 0;
  double accuracy = 0.0;
};

struct EvalReport {
  std::string name;
  std::size_t samples = 0;
  double accuracy = 0.0;
  double weighted_f1 = 0.0;
  std::array<double, kNumEmotions> per_class_f1{};
  std::array<std::uint64_t, kNumEmotions> support{};
  double response_accuracy = 0.0;
  std::vector<DialogueAccuracy> per_dialogue;
  ConfusionMatrix confusion{};
};

// `dialogue_ids[i]` groups turn i for the response accuracy.
EvalReport MakeReport(const std::string& name, const std::vector<int>& preds,
                      const std::vector<int>& golds, const std::vector<int>& dialogue_ids);

std::string ReportToJson(const EvalReport& report);
std::string ReportsToJson(const std::vector<EvalReport>& reports);

// One row per report: per-class F1, weighted F1, accuracy, response accuracy.
std::string ReportTable(const std::vector<EvalReport>& reports);

}  // namespace affectlink::harness

#endif  // AFFECTLINK_HARNESS_METRICS_HPP
