// SPDX-License-Identifier: Apache-2.0
#include "baggagedet/evalkit/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace baggagedet::evalkit {

std::optional<Stat> summarize(const std::vector<double>& xs) {
  if (xs.empty()) return std::nullopt;
  Stat s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(var / static_cast<double>(xs.size()));
  return s;
}

namespace {

enum class Field { P, R, AP };

std::optional<Stat> class_stat(const ReportRow& row, int c, Field f) {
  std::vector<double> xs;
  for (const auto& m : row.splits) {
    if (c < 0 || static_cast<std::size_t>(c) >= m.per_class.size())
      throw std::invalid_argument("report: class " + std::to_string(c) + " missing from metrics");
    const auto& cm = m.per_class[static_cast<std::size_t>(c)];
    if (!cm.has_gt) return std::nullopt;
    xs.push_back(f == Field::P ? cm.precision : f == Field::R ? cm.recall : cm.ap);
  }
  return summarize(xs);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::string cell_text(const std::optional<Stat>& s) {
  if (!s) return "n/a";
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.1f ± %.1f", 100.0 * s->mean, 100.0 * s->std);
  return buf;
}

// display width counting each UTF-8 code point once
std::size_t width(const std::string& s) {
  std::size_t n = 0;
  for (unsigned char ch : s) n += (ch & 0xC0) != 0x80;
  return n;
}

}  // namespace

TableDocument report(const ReportLayout& layout, const std::vector<ReportRow>& rows) {
  struct Col {
    std::string name;
    int cls;
    Field field;
  };
  std::vector<Col> cols;
  for (int c : layout.classes) {
    const std::string n = class_name(c);
    if (layout.precision_recall) {
      cols.push_back({n + " P", c, Field::P});
      cols.push_back({n + " R", c, Field::R});
    }
    if (layout.average_precision) cols.push_back({n + " AP", c, Field::AP});
  }

  std::ostringstream csv;
  std::vector<std::string> header = layout.key_headers;
  for (std::size_t i = 0; i < header.size(); ++i) csv << (i ? "," : "") << header[i];
  auto csv_name = [](std::string s) {
    std::replace(s.begin(), s.end(), ' ', '_');
    return s;
  };
  for (const auto& col : cols) csv << ',' << csv_name(col.name) << "_mean," << csv_name(col.name) << "_std";
  csv << ",mAP_mean,mAP_std,splits\n";

  std::vector<std::vector<std::string>> grid;
  header.reserve(header.size() + cols.size() + 1);
  for (const auto& col : cols) header.push_back(col.name);
  header.push_back("mAP");
  grid.push_back(header);

  for (const auto& row : rows) {
    if (row.splits.empty()) throw std::invalid_argument("report: row without split results");
    if (row.keys.size() != layout.key_headers.size()) throw std::invalid_argument("report: key count mismatch");
    std::vector<std::string> line = row.keys;
    for (std::size_t i = 0; i < row.keys.size(); ++i) csv << (i ? "," : "") << row.keys[i];
    for (const auto& col : cols) {
      const auto s = class_stat(row, col.cls, col.field);
      csv << ',' << (s ? fmt(s->mean) : "n/a") << ',' << (s ? fmt(s->std) : "n/a");
      line.push_back(cell_text(s));
    }
    std::vector<double> maps;
    for (const auto& m : row.splits) maps.push_back(m.map);
    const auto ms = summarize(maps);
    csv << ',' << fmt(ms->mean) << ',' << fmt(ms->std) << ',' << row.splits.size() << '\n';
    line.push_back(cell_text(ms));
    grid.push_back(std::move(line));
  }

  std::vector<std::size_t> w(grid[0].size(), 0);
  for (const auto& line : grid)
    for (std::size_t i = 0; i < line.size(); ++i) w[i] = std::max(w[i], width(line[i]));
  std::ostringstream text;
  if (!layout.title.empty()) text << layout.title << '\n';
  for (std::size_t r = 0; r < grid.size(); ++r) {
    for (std::size_t i = 0; i < grid[r].size(); ++i) {
      text << (i ? " | " : "") << grid[r][i];
      if (i + 1 < grid[r].size()) text << std::string(w[i] - width(grid[r][i]), ' ');
    }
    text << '\n';
    if (r == 0) {
      std::size_t total = 0;
      for (std::size_t i = 0; i < w.size(); ++i) total += w[i] + (i ? 3 : 0);
      text << std::string(total, '-') << '\n';
    }
  }
  text << "(percent, mean ± std over splits)\n";
  return {csv.str(), text.str()};
}

}  // namespace baggagedet::evalkit
