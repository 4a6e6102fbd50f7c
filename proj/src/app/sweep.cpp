// SPDX-License-Identifier: Apache-2.0
#include "baggagedet/app/sweep.hpp"

#include <cstdio>

#include "baggagedet/app/experiment.hpp"
#include "baggagedet/volcore/bvox.hpp"

namespace baggagedet::app {

namespace {

const std::vector<int> kAllClasses{0, 1, 2, 3, 4};

}  // namespace

std::vector<std::string> sweep_table_names() { return {"backbone", "aug", "scale", "energy"}; }

SweepTable sweep_table(const std::string& name) {
  SweepTable t;
  t.name = name;
  t.map_classes = kAllClasses;
  t.layout.classes = kAllClasses;
  if (name == "backbone") {
    t.layout.title = "Backbone depth";
    t.layout.key_headers = {"Model"};
    t.layout.precision_recall = true;
    for (int d : {10, 18, 34, 50, 101})
      t.rows.push_back({{"ResNet-" + std::to_string(d)}, {{"model.depth", std::to_string(d)}}});
  } else if (name == "aug") {
    t.layout.title = "Data augmentation (flip / rotation probability)";
    t.layout.key_headers = {"Flipping", "Rotation"};
    t.layout.precision_recall = false;
    t.layout.average_precision = true;
    for (const auto& [f, r] : std::vector<std::pair<std::string, std::string>>{
             {"off", "off"}, {"0.2", "off"}, {"off", "0.2"}, {"0.2", "0.2"}, {"0.5", "0.5"}})
      t.rows.push_back({{f, r}, {{"aug.p", f + "/" + r}}});
  } else if (name == "scale") {
    t.layout.title = "Scaling factor and anchor sizes";
    t.layout.key_headers = {"Scaling factor", "Anchor size"};
    t.layout.precision_recall = false;
    t.layout.average_precision = true;
    for (const auto& [s, a] : std::vector<std::pair<std::string, std::string>>{
             {"2", "8-16-32-64"}, {"3", "4-8-16-32"}, {"3", "8-16-32-64"}, {"4", "4-8-16-32"}, {"4", "8-16-32-64"}})
      t.rows.push_back({{s, a}, {{"scale.s", s}, {"anchors.sizes", a}}});
  } else if (name == "energy") {
    t.layout.title = "Energy channels";
    t.layout.key_headers = {"Data"};
    t.layout.classes = {0, 1};
    t.layout.precision_recall = true;
    t.layout.average_precision = true;
    t.map_classes = {0, 1};
    t.rows.push_back({{"Low"}, {{"channels", "low"}}});
    t.rows.push_back({{"High"}, {{"channels", "high"}}});
    t.rows.push_back({{"High+Low"}, {{"channels", "dual"}}});
  } else {
    throw ConfigError("table", "table: unknown sweep table '" + name + "' (backbone, aug, scale, energy)");
  }
  return t;
}

evalkit::TableDocument run_sweep(const ExperimentConfig& cfg, const std::string& name) {
  const SweepTable table = sweep_table(name);
  const auto dir = cfg.out / ("sweep_" + name);
  // validate every cell before spending compute on any of them
  std::vector<ExperimentConfig> row_cfgs;
  for (const auto& row : table.rows) {
    ExperimentConfig rc = cfg;
    for (const auto& [k, v] : row.settings) apply_setting(rc, k, v);
    validate(rc);
    row_cfgs.push_back(rc);
  }
  std::vector<evalkit::ReportRow> report_rows;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    evalkit::ReportRow rr{table.rows[i].keys, {}};
    for (int split = 1; split <= cfg.split_cfg.count; ++split) {
      ExperimentConfig cell = row_cfgs[i];
      cell.split = split;
      cell.out = dir / ("row" + std::to_string(i + 1)) / ("split" + std::to_string(split));
      const auto m = run_pipeline(cell);
      std::fprintf(stderr, "sweep %s row %zu split %d: mAP %.4f\n", name.c_str(), i + 1, split, m.map);
      rr.splits.push_back(evalkit::restrict_map(m, table.map_classes));
    }
    report_rows.push_back(std::move(rr));
  }
  auto doc = evalkit::report(table.layout, report_rows);
  write_text_file(dir / "table.csv", doc.csv);
  write_text_file(dir / "table.txt", doc.text);
  return doc;
}

}  // namespace baggagedet::app
