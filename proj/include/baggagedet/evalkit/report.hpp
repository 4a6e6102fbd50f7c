// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "baggagedet/evalkit/metrics.hpp"

namespace baggagedet::evalkit {

/// Mean and population standard deviation; empty when there were no samples.
struct Stat {
  double mean = 0.0;
  double std = 0.0;
};
std::optional<Stat> summarize(const std::vector<double>& xs);

/// One table row: its key cells (e.g. backbone name, or flip/rotation probabilities) and the
/// metrics of each split.
struct ReportRow {
  std::vector<std::string> keys;
  std::vector<Metrics> splits;
};

struct ReportLayout {
  std::string title;
  std::vector<std::string> key_headers;
  std::vector<int> classes;  // class ids to show, in column order
  bool precision_recall = true;
  bool average_precision = false;
};

struct TableDocument {
  std::string csv;
  std::string text;
};

/// Cells are mean ± population std over the row's splits. A class without gt in every split
/// renders "n/a"; mAP is always present.
TableDocument report(const ReportLayout& layout, const std::vector<ReportRow>& rows);

}  // namespace baggagedet::evalkit
