#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace finmem::cli {

enum ExitCode : int {
    kOk = 0,
    kConfigError = 2,
    kNotConverged = 3,
    kInvariantViolation = 4,
};

inline constexpr const char* kVersion = "0.1.0";
/// Default output directory when --out is not given.
inline constexpr const char* kOutDirEnv = "FINMEM_OUT_DIR";

/// Runs one command; args excludes the program name. Artifacts go under --out.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// 64-bit FNV-1a of a byte string.
unsigned long long fnv1a(const std::string& bytes);

} // namespace finmem::cli
