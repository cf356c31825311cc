#pragma once

#include "ivtrial/error.hpp"

#include <cstdint>
#include <iosfwd>
#include <string_view>

namespace ivtrial {

enum ExitCode : int { kExitOk = 0, kExitUsage = 2, kExitData = 3, kExitNumerical = 4 };

/// Usage (2), data (3) or numerical (4).
int exit_code_for(ErrorKind kind) noexcept;

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t hash = 0xcbf29ce484222325ULL) noexcept;

/// Entry point of the ivtrial executable; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ivtrial
