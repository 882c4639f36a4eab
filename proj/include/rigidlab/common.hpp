#pragma once

// Shared basics: error taxonomy mapped to process exit codes, small dense
// matrix aliases sized for n in {2,3}, and a fully pinned RNG so that seeded
// runs replay bit-identically on any platform.

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace rigidlab {

// Stack-allocated dynamic matrices capped at 3x3; avoids heap traffic in the
// per-cell loops without templating every consumer on the dimension.
using MatN = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::AutoAlign, 3, 3>;
using VecN = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::AutoAlign, 3, 1>;

inline MatN zero_mat(int n) { return MatN::Zero(n, n); }
inline MatN identity_mat(int n) { return MatN::Identity(n, n); }

// Exit-code contract: 0 ok, 2 contract violation, 3 fixture mismatch,
// 4 invalid input (bad config, bad geometry, resolution too coarse, ...).
enum class ErrorCode : int { contract = 2, fixture = 3, input = 4 };

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail_input(const std::string& msg) {
  throw Error(ErrorCode::input, msg);
}
[[noreturn]] inline void fail_contract(const std::string& msg) {
  throw Error(ErrorCode::contract, msg);
}
[[noreturn]] inline void fail_fixture(const std::string& msg) {
  throw Error(ErrorCode::fixture, msg);
}

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}
}  // namespace detail

// Labeled RNG stream (xoshiro256**). One master seed per run is split by
// label, so adding a consumer never shifts the draws of existing ones.
class Rng {
 public:
  Rng(std::uint64_t seed, std::string_view label) {
    std::uint64_t x = seed ^ detail::fnv1a(label);
    for (auto& si : s_) si = detail::splitmix64(x);
  }

  std::uint64_t next_u64() {
    auto rotl = [](std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); };
    std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in [0,1) with 53 significant bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // Box-Muller; not std::normal_distribution, whose sequence is
  // implementation-defined and would un-pin frozen fixtures.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 <= 1e-300) u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  int uniform_int(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(next_u64() % static_cast<std::uint64_t>(hi - lo + 1));
  }

 private:
  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace rigidlab
