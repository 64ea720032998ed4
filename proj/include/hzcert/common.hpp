#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace hzcert {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dimension / shape contract violations.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Out-of-range or otherwise invalid values (bad box bounds, NaN, ...).
class ValueError : public Error {
 public:
  using Error::Error;
};

// Text format errors (network files, DSL expressions); message carries position.
class ParseError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (std::size_t d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << ']';
  return os.str();
}

// Splittable counter-based random stream. Every draw is a pure function of
// (key, counter), so independent streams never share state and runs are
// reproducible from the root seed regardless of evaluation order.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(mix(mix(seed + 0x9e3779b97f4a7c15ULL, 0x1234567887654321ULL), stream)) {}

  RngStream split(std::uint64_t index) const {
    RngStream r(0);
    r.key_ = mix(key_, 0xd1342543de82ef95ULL + index);
    r.counter_ = 0;
    return r;
  }

  std::uint64_t next_u64() { return mix(key_, ++counter_); }

  // [0,1)
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    // Box-Muller; first uniform shifted away from zero.
    double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

 private:
  static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace hzcert
