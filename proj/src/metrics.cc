// Copyright 2026 The gbm Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "gbm/metrics.h"

#include <algorithm>
#include <cstdio>

#include "gbm/status.h"

namespace gbm {

namespace {

void CheckInputs(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size() || scores.empty()) {
    throw Error(ErrorCode::kLengthMismatch,
                std::to_string(scores.size()) + " scores vs " +
                    std::to_string(labels.size()) + " labels");
  }
  for (int y : labels) {
    if (y != 0 && y != 1) throw Error(ErrorCode::kInvalidArgument, "labels must be 0 or 1");
  }
}

std::string FormatDouble(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

double Median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

double Precision(const ConfusionMatrix& c) {
  return c.tp + c.fp == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
}

double Recall(const ConfusionMatrix& c) {
  return c.tp + c.fn == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
}

double F1FromPrecisionRecall(double precision, double recall) {
  return precision + recall == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
}

MetricReport ComputeMetrics(std::span<const double> scores, std::span<const int> labels,
                            double threshold) {
  CheckInputs(scores, labels);
  MetricReport r;
  r.threshold = threshold;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (predicted && labels[i] == 1) ++r.confusion.tp;
    if (predicted && labels[i] == 0) ++r.confusion.fp;
    if (!predicted && labels[i] == 1) ++r.confusion.fn;
    if (!predicted && labels[i] == 0) ++r.confusion.tn;
  }
  r.precision = Precision(r.confusion);
  r.recall = Recall(r.confusion);
  r.f1 = F1FromPrecisionRecall(r.precision, r.recall);
  r.accuracy = static_cast<double>(r.confusion.tp + r.confusion.tn) /
               static_cast<double>(r.confusion.total());
  r.predicted_positive = r.confusion.tp + r.confusion.fp;
  return r;
}

std::vector<double> DefaultSweepThresholds() {
  std::vector<double> t;
  for (int k = 0; k <= 20; ++k) t.push_back(k / 20.0);
  return t;
}

std::vector<MetricReport> ThresholdSweep(std::span<const double> scores,
                                         std::span<const int> labels,
                                         const std::vector<double>& thresholds) {
  std::vector<MetricReport> out;
  out.reserve(thresholds.size());
  for (double t : thresholds) out.push_back(ComputeMetrics(scores, labels, t));
  return out;
}

std::string SweepToCsv(const std::vector<MetricReport>& sweep) {
  std::string out = "threshold,precision,recall,f1,pred_pos\n";
  for (const MetricReport& r : sweep) {
    out += FormatDouble(r.threshold) + "," + FormatDouble(r.precision) + "," +
           FormatDouble(r.recall) + "," + FormatDouble(r.f1) + "," +
           std::to_string(r.predicted_positive) + "\n";
  }
  return out;
}

nlohmann::json MetricReportToJson(const MetricReport& r) {
  return {{"threshold", r.threshold},
          {"tp", r.confusion.tp},
          {"tn", r.confusion.tn},
          {"fp", r.confusion.fp},
          {"fn", r.confusion.fn},
          {"precision", r.precision},
          {"recall", r.recall},
          {"f1", r.f1},
          {"accuracy", r.accuracy},
          {"pred_pos", r.predicted_positive}};
}

SizeGapTable ErrorAnalysis(std::span<const double> scores, std::span<const int> labels,
                           std::span<const std::size_t> node_counts_a,
                           std::span<const std::size_t> node_counts_b, double threshold) {
  CheckInputs(scores, labels);
  if (node_counts_a.size() != scores.size() || node_counts_b.size() != scores.size()) {
    throw Error(ErrorCode::kLengthMismatch, "node counts do not match the pairs");
  }
  std::map<std::string, std::vector<double>> sizes;
  std::map<std::string, std::size_t> pairs;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    const std::string outcome = std::string(predicted == (labels[i] == 1) ? "T" : "F") +
                                (predicted ? "P" : "N");
    ++pairs[outcome];
    sizes[outcome].push_back(static_cast<double>(node_counts_a[i]));
    sizes[outcome].push_back(static_cast<double>(node_counts_b[i]));
  }
  SizeGapTable table;
  for (auto& [outcome, values] : sizes) {
    double sum = 0.0;
    for (double v : values) sum += v;
    table[outcome] = SizeGapRow{pairs[outcome], sum / static_cast<double>(values.size()),
                                Median(values)};
  }
  return table;
}

std::string SizeGapToCsv(const SizeGapTable& table) {
  std::string out = "outcome,pairs,mean_nodes,median_nodes\n";
  for (const char* outcome : {"TP", "FP", "TN", "FN"}) {
    auto it = table.find(outcome);
    if (it == table.end()) continue;
    out += std::string(outcome) + "," + std::to_string(it->second.pairs) + "," +
           FormatDouble(it->second.mean_nodes) + "," +
           FormatDouble(it->second.median_nodes) + "\n";
  }
  return out;
}

}  // namespace gbm
