#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace vcs {

/// Base class for all toolkit errors. The CLI maps the concrete type to a
/// machine-parsable one-line prefix.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shape/dimension contract violations (mismatched cubes, odd Bayer dims, ...).
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Size guards exceeded (e.g. the dense sensing-matrix oracle).
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values where finiteness is required (diverged training, ...).
class NumericError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

/// Maximum worker count for parallel_for. 0 picks hardware concurrency.
/// Initialized once from the VCS_THREADS environment variable; callers may
/// override programmatically.
void set_thread_cap(int n);
int thread_cap();

/// Runs body(begin, end) over a partition of [0, n). Partitions are contiguous
/// and each output element is written by exactly one invocation, so results
/// are identical for any thread count as long as body itself is a gather.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& body);

}  // namespace vcs
