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

#ifndef GBM_METRICS_H_
#define GBM_METRICS_H_

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace gbm {

struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t tn = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + tn + fp + fn; }
  bool operator==(const ConfusionMatrix&) const = default;
};

struct MetricReport {
  double threshold = 0.5;
  ConfusionMatrix confusion;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  // (TP + TN) / total.
  double accuracy = 0.0;
  std::size_t predicted_positive = 0;

  bool operator==(const MetricReport&) const = default;
};

// Precision, recall and F1 from counts. Degenerate ratios are 0.
double Precision(const ConfusionMatrix& c);
double Recall(const ConfusionMatrix& c);
double F1FromPrecisionRecall(double precision, double recall);

// A pair is predicted to match when score >= threshold.
// Throws Error(kLengthMismatch) for unequal or empty inputs and
// Error(kInvalidArgument) for labels outside {0, 1}.
MetricReport ComputeMetrics(std::span<const double> scores, std::span<const int> labels,
                            double threshold);

// Thresholds k / 20 for k = 0..20.
std::vector<double> DefaultSweepThresholds();

std::vector<MetricReport> ThresholdSweep(std::span<const double> scores,
                                         std::span<const int> labels,
                                         const std::vector<double>& thresholds);

// `threshold,precision,recall,f1,pred_pos` with a header row.
std::string SweepToCsv(const std::vector<MetricReport>& sweep);
nlohmann::json MetricReportToJson(const MetricReport& report);

struct SizeGapRow {
  std::size_t pairs = 0;
  double mean_nodes = 0.0;
  double median_nodes = 0.0;
};

// Outcome class ("TP", "FP", "TN", "FN") -> node-count statistics over both
// graphs of every pair in that class. Classes without pairs are absent.
using SizeGapTable = std::map<std::string, SizeGapRow>;

// `node_counts_a[k]` and `node_counts_b[k]` are the graph sizes of pair k.
SizeGapTable ErrorAnalysis(std::span<const double> scores, std::span<const int> labels,
                           std::span<const std::size_t> node_counts_a,
                           std::span<const std::size_t> node_counts_b, double threshold);

// `outcome,pairs,mean_nodes,median_nodes`, rows in TP, FP, TN, FN order.
std::string SizeGapToCsv(const SizeGapTable& table);

}  // namespace gbm

#endif  // GBM_METRICS_H_
