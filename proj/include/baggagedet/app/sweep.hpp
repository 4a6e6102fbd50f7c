// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "baggagedet/app/config.hpp"
#include "baggagedet/evalkit/report.hpp"

namespace baggagedet::app {

/// One sweep row: its table key cells and the config settings that realise it.
struct SweepRow {
  std::vector<std::string> keys;
  std::vector<std::pair<std::string, std::string>> settings;
};

struct SweepTable {
  std::string name;  // backbone | aug | scale | energy
  evalkit::ReportLayout layout;
  std::vector<SweepRow> rows;
  std::vector<int> map_classes;  // classes averaged into mAP
};

/// Throws ConfigError (key "table") for unknown names.
SweepTable sweep_table(const std::string& name);
std::vector<std::string> sweep_table_names();

/// Runs every row on splits 1..cfg.split_cfg.count with run_pipeline, each cell in
/// <out>/sweep_<name>/row<i>/split<k> with the row's settings applied on top of `cfg`. Writes
/// <out>/sweep_<name>/table.csv and table.txt.
evalkit::TableDocument run_sweep(const ExperimentConfig& cfg, const std::string& name);

}  // namespace baggagedet::app
