// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace baggagedet {

enum class SplitRole { Train, Test };

/// One manifest line. A volume with no split assignment belongs to the unassigned pool
/// written by dataset synthesis; `split` assigns it to train/test for split indices 1..3.
struct ManifestEntry {
  std::string volume;  // path, relative to the manifest's directory unless absolute
  std::optional<SplitRole> role;
  int split_index = 0;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct Manifest {
  std::filesystem::path base_dir;
  std::vector<ManifestEntry> entries;

  /// Distinct volume paths in first-seen order.
  std::vector<std::string> volumes() const;
  /// Volumes with the given role in the given split.
  std::vector<std::string> select(SplitRole role, int split_index) const;
  std::filesystem::path resolve(const std::string& volume) const;
};

// Text format: one record per line, comma-separated "volume[,train|test,split_index]".
// Lines starting with '#' and blank lines are ignored.
Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const Manifest& manifest, const std::filesystem::path& path);
std::string format_manifest(const Manifest& manifest);
Manifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir);

const char* to_string(SplitRole role);

/// Random train/test assignment: for each split index in 1..num_splits the volumes are shuffled
/// with an independent stream and the first round(ratio * n) go to train.
Manifest make_splits(const std::vector<std::string>& volumes, double train_ratio, int num_splits,
                     unsigned long long seed, const std::filesystem::path& base_dir);

}  // namespace baggagedet
