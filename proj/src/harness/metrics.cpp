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

#include "affectlink/harness/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <nlohmann/json.hpp>

#include "affectlink/error.hpp"

namespace affectlink::harness {
namespace {

void CheckLabels(const std::vector<int>& labels) {
  for (int l : labels) {
    if (!IsValidEmotionId(l)) throw Error(ErrorCode::kEvalError, "label " + std::to_string(l) + " outside 0..6");
  }
}

nlohmann::json ReportJsonValue(const EvalReport& r) {
  using nlohmann::json;
  json per_class = json::object();
  json support = json::object();
  for (int e = 0; e < kNumEmotions; ++e) {
    const std::string name(kEmotionNames[static_cast<std::size_t>(e)]);
    per_class[name] = r.per_class_f1[static_cast<std::size_t>(e)];
    support[name] = r.support[static_cast<std::size_t>(e)];
  }
  json dialogues = json::array();
  for (const auto& d : r.per_dialogue) {
    dialogues.push_back({{"dialogue", d.dialogue}, {"turns", d.turns}, {"accuracy", d.accuracy}});
  }
  json confusion = json::array();
  for (const auto& row : r.confusion) confusion.push_back(row);
  return {{"name", r.name},
          {"samples", r.samples},
          {"accuracy", r.accuracy},
          {"weighted_f1", r.weighted_f1},
          {"per_class_f1", std::move(per_class)},
          {"support", std::move(support)},
          {"response_accuracy", r.response_accuracy},
          {"per_dialogue", std::move(dialogues)},
          {"confusion", std::move(confusion)}};
}

}  // namespace

ConfusionMatrix Confusion(const std::vector<int>& preds, const std::vector<int>& golds) {
  if (preds.size() != golds.size()) {
    throw Error(ErrorCode::kEvalError, "predictions and gold labels differ in length");
  }
  CheckLabels(preds);
  CheckLabels(golds);
  ConfusionMatrix cm{};
  for (std::size_t i = 0; i < preds.size(); ++i) {
    ++cm[static_cast<std::size_t>(golds[i])][static_cast<std::size_t>(preds[i])];
  }
  return cm;
}

std::array<double, kNumEmotions> PerClassF1(const ConfusionMatrix& cm) {
  std::array<double, kNumEmotions> f1{};
  for (std::size_t c = 0; c < kNumEmotions; ++c) {
    const double tp = static_cast<double>(cm[c][c]);
    double support = 0.0;
    double predicted = 0.0;
    for (std::size_t k = 0; k < kNumEmotions; ++k) {
      support += static_cast<double>(cm[c][k]);
      predicted += static_cast<double>(cm[k][c]);
    }
    // F1 = 2tp / (2tp + fp + fn) = 2tp / (predicted + support)
    f1[c] = predicted + support > 0.0 ? 2.0 * tp / (predicted + support) : 0.0;
  }
  return f1;
}

double WeightedF1(const std::vector<int>& preds, const std::vector<int>& golds) {
  const auto cm = Confusion(preds, golds);
  if (golds.empty()) return 0.0;
  const auto f1 = PerClassF1(cm);
  double total = 0.0;
  for (std::size_t c = 0; c < kNumEmotions; ++c) {
    double support = 0.0;
    for (std::size_t k = 0; k < kNumEmotions; ++k) support += static_cast<double>(cm[c][k]);
    total += support * f1[c];
  }
  return total / static_cast<double>(golds.size());
}

double ResponseAccuracy(const std::vector<DialogueOutcome>& dialogues) {
  if (dialogues.empty()) throw Error(ErrorCode::kEvalError, "no dialogues");
  double sum = 0.0;
  for (const auto& [preds, golds] : dialogues) {
    if (preds.empty()) throw Error(ErrorCode::kEvalError, "empty dialogue");
    if (preds.size() != golds.size()) {
      throw Error(ErrorCode::kEvalError, "predictions and gold labels differ in length");
    }
    std::size_t correct = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) correct += preds[i] == golds[i] ? 1 : 0;
    sum += static_cast<double>(correct) / static_cast<double>(preds.size());
  }
  return sum / static_cast<double>(dialogues.size());
}

EvalReport MakeReport(const std::string& name, const std::vector<int>& preds,
                      const std::vector<int>& golds, const std::vector<int>& dialogue_ids) {
  if (dialogue_ids.size() != golds.size()) {
    throw Error(ErrorCode::kEvalError, "dialogue ids and gold labels differ in length");
  }
  EvalReport r;
  r.name = name;
  r.samples = golds.size();
  r.confusion = Confusion(preds, golds);
  r.per_class_f1 = PerClassF1(r.confusion);
  r.weighted_f1 = WeightedF1(preds, golds);
  std::size_t correct = 0;
  for (std::size_t c = 0; c < kNumEmotions; ++c) {
    correct += r.confusion[c][c];
    for (std::size_t k = 0; k < kNumEmotions; ++k) r.support[c] += r.confusion[c][k];
  }
  r.accuracy = golds.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(golds.size());

  std::vector<int> order;
  std::vector<DialogueOutcome> outcomes;
  for (std::size_t i = 0; i < golds.size(); ++i) {
    auto it = std::find(order.begin(), order.end(), dialogue_ids[i]);
    if (it == order.end()) {
      order.push_back(dialogue_ids[i]);
      outcomes.emplace_back();
      it = order.end() - 1;
    }
    auto& o = outcomes[static_cast<std::size_t>(it - order.begin())];
    o.first.push_back(preds[i]);
    o.second.push_back(golds[i]);
  }
  for (std::size_t d = 0; d < outcomes.size(); ++d) {
    r.per_dialogue.push_back({order[d], outcomes[d].first.size(), ResponseAccuracy({outcomes[d]})});
  }
  r.response_accuracy = outcomes.empty() ? 0.0 : ResponseAccuracy(outcomes);
  return r;
}

std::string ReportToJson(const EvalReport& report) { return ReportJsonValue(report).dump(2); }

std::string ReportsToJson(const std::vector<EvalReport>& reports) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : reports) arr.push_back(ReportJsonValue(r));
  return arr.dump(2);
}

std::string ReportTable(const std::vector<EvalReport>& reports) {
  std::size_t name_width = 6;
  for (const auto& r : reports) name_width = std::max(name_width, r.name.size());
  std::string out;
  char cell[64];
  auto add = [&](const char* fmt, auto... args) {
    std::snprintf(cell, sizeof cell, fmt, args...);
    out += cell;
  };
  add("%-*s", static_cast<int>(name_width), "Method");
  for (const auto name : kEmotionNames) add(" %9.9s", std::string(name).c_str());
  add(" %9s %9s %9s\n", "w-F1", "Acc", "RespAcc");
  for (const auto& r : reports) {
    add("%-*s", static_cast<int>(name_width), r.name.c_str());
    for (double f : r.per_class_f1) add(" %9.2f", 100.0 * f);
    add(" %9.2f %9.2f %9.2f\n", 100.0 * r.weighted_f1, 100.0 * r.accuracy, 100.0 * r.response_accuracy);
  }
  return out;
}

}  // namespace affectlink::harness
