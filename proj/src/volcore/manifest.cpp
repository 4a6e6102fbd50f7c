// SPDX-License-Identifier: Apache-2.0
#include "baggagedet/volcore/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "baggagedet/core/rng.hpp"
#include "baggagedet/volcore/bvox.hpp"

namespace baggagedet {

const char* to_string(SplitRole role) { return role == SplitRole::Train ? "train" : "test"; }

std::vector<std::string> Manifest::volumes() const {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& e : entries) {
    if (seen.insert(e.volume).second) out.push_back(e.volume);
  }
  return out;
}

std::vector<std::string> Manifest::select(SplitRole role, int split_index) const {
  std::vector<std::string> out;
  for (const auto& e : entries) {
    if (e.role == role && e.split_index == split_index) out.push_back(e.volume);
  }
  return out;
}

std::filesystem::path Manifest::resolve(const std::string& volume) const {
  std::filesystem::path p(volume);
  return p.is_absolute() ? p : base_dir / p;
}

Manifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir) {
  Manifest m;
  m.base_dir = base_dir;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ls(line);
    std::string f;
    while (std::getline(ls, f, ',')) fields.push_back(f);
    ManifestEntry e;
    e.volume = fields.at(0);
    if (fields.size() == 3) {
      if (fields[1] == "train") {
        e.role = SplitRole::Train;
      } else if (fields[1] == "test") {
        e.role = SplitRole::Test;
      } else {
        throw std::invalid_argument("manifest line " + std::to_string(lineno) + ": split must be train|test");
      }
      e.split_index = std::stoi(fields[2]);
      if (e.split_index < 1 || e.split_index > 3) {
        throw std::invalid_argument("manifest line " + std::to_string(lineno) + ": split_index must be 1..3");
      }
    } else if (fields.size() != 1) {
      throw std::invalid_argument("manifest line " + std::to_string(lineno) + ": expected 1 or 3 fields");
    }
    m.entries.push_back(std::move(e));
  }
  return m;
}

std::string format_manifest(const Manifest& manifest) {
  std::ostringstream out;
  out << "# volume,split,split_index\n";
  for (const auto& e : manifest.entries) {
    out << e.volume;
    if (e.role) out << ',' << to_string(*e.role) << ',' << e.split_index;
    out << '\n';
  }
  return out.str();
}

Manifest read_manifest(const std::filesystem::path& path) {
  return parse_manifest(read_text_file(path), path.parent_path());
}

void write_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  write_text_file(path, format_manifest(manifest));
}

Manifest make_splits(const std::vector<std::string>& volumes, double train_ratio, int num_splits,
                     unsigned long long seed, const std::filesystem::path& base_dir) {
  if (!(train_ratio > 0.0 && train_ratio < 1.0)) throw std::invalid_argument("split ratio must be in (0,1)");
  if (num_splits < 1 || num_splits > 3) throw std::invalid_argument("number of splits must be 1..3");
  Manifest m;
  m.base_dir = base_dir;
  const auto n_train = static_cast<std::size_t>(std::llround(train_ratio * static_cast<double>(volumes.size())));
  for (int split = 1; split <= num_splits; ++split) {
    std::vector<std::size_t> order(volumes.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng = make_rng(seed, {0x5711, static_cast<std::uint64_t>(split)});
    shuffle_in_place(order, rng);
    std::vector<bool> is_train(volumes.size(), false);
    for (std::size_t i = 0; i < n_train; ++i) is_train[order[i]] = true;
    for (std::size_t i = 0; i < volumes.size(); ++i) {
      m.entries.push_back({volumes[i], is_train[i] ? SplitRole::Train : SplitRole::Test, split});
    }
  }
  return m;
}

}  // namespace baggagedet
