#pragma once

#include <stdexcept>
#include <string>

namespace coastflow {

/// Invalid or inconsistent configuration (exit code 2 at the CLI).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Nonlinear solver breakdown: non-convergence below the minimum time step,
/// factorization failure, or an invariant violation (exit code 3).
class SolverError : public std::runtime_error {
public:
    explicit SolverError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Training abort: non-finite loss or gradient (exit code 4).
class TrainingError : public std::runtime_error {
public:
    explicit TrainingError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Persistence failure: missing artifact, bad magic, length mismatch (exit code 5).
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace coastflow
