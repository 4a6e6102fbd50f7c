// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <iosfwd>

namespace baggagedet::app {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 1;
inline constexpr int kExitRuntimeError = 2;

/// Entry point behind the `baggagedet` executable. Subcommands: synth, tip, split, train,
/// detect, eval, sweep, render. Returns 0 on success, 1 on configuration errors (the message
/// names the offending key), 2 on runtime failures.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Exclusive ownership of an output directory through <dir>/.baggagedet.lock. A lock left by a
/// process that no longer exists is taken over.
class DirectoryLock {
 public:
  explicit DirectoryLock(const std::filesystem::path& dir);
  ~DirectoryLock();
  DirectoryLock(const DirectoryLock&) = delete;
  DirectoryLock& operator=(const DirectoryLock&) = delete;

 private:
  std::filesystem::path path_;
};

}  // namespace baggagedet::app
