#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace resmatch {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shape or dimension mismatch between operands.
struct DimError : Error {
  using Error::Error;
};

// Invalid user-supplied configuration value.
struct ConfigError : Error {
  using Error::Error;
};

// File I/O and parse failures; byte_offset is the position when known.
struct IoError : Error {
  explicit IoError(const std::string& msg, long long offset = -1)
      : Error(offset >= 0 ? msg + " (byte offset " + std::to_string(offset) + ")" : msg),
        byte_offset(offset) {}
  long long byte_offset;
};

// Non-finite values where finite ones are required.
struct NumericError : Error {
  using Error::Error;
};

// API misuse: backward before forward, double adjustment, and similar.
struct UsageError : Error {
  using Error::Error;
};

// Deterministic random stream. mt19937_64 provides the bits; the scalar
// transforms are spelled out here so identical seeds give identical streams
// on every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // standard normal via Box-Muller
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // uniform integer in [0, n)
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace resmatch
