// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <string>
#include <vector>

#include "pathbench/image.hpp"

namespace pathbench {

enum class ProcessPhase { Spawn, Write, Read, Wait };
const char* to_string(ProcessPhase phase) noexcept;

inline constexpr std::size_t kStderrExcerptBytes = 4096;

/// Failure of an external program. Carries the phase, exit status (-1 when the
/// process never ran or was killed) and up to 4 KiB of its stderr.
class AdapterError : public Error {
 public:
  AdapterError(const std::string& what, ProcessPhase phase, int exit_status, std::string stderr_excerpt);
  ProcessPhase phase() const noexcept { return phase_; }
  int exit_status() const noexcept { return exit_status_; }
  const std::string& stderr_excerpt() const noexcept { return stderr_; }

 private:
  ProcessPhase phase_;
  int exit_status_;
  std::string stderr_;
};

struct ProcessResult {
  int exit_status = 0;
  Bytes stdout_data;
  std::string stderr_data;
};

/// Runs argv[0] with `input` on stdin, collecting stdout and stderr to EOF before
/// reaping. Kills the child and throws AdapterError(Wait) once `timeout` elapses;
/// throws AdapterError(Spawn) when the program cannot be started. A nonzero exit is
/// reported in the result, not thrown.
ProcessResult run_process(const std::vector<std::string>& argv, std::span<const Byte> input,
                          std::chrono::milliseconds timeout);

}  // namespace pathbench
