#pragma once

// Noiseless simulator of a CKKS-style SIMD scheme.
//
// A ciphertext is a vector of real slots plus the bookkeeping a leveled
// scheme carries: the remaining multiplicative level and the scale
// exponent (in multiples of 2^log_p). Every operation is exact in double
// precision; what the simulator enforces is the *budget*. mult and cmult
// rescale implicitly and cost one level each, add aligns both operands to
// the lower level, rot is free, and bootstrap restores max_level.

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "revolver/errors.hpp"

namespace revolver::he {

struct HEParams {
  int log_n = 16;
  int log_q = 990;
  int log_p = 45;

  /// Full-scale parameters: 32768 slots, 22 levels.
  static HEParams full_scale() { return HEParams{}; }

  /// Same modulus chain with a different slot count (power of two >= 2).
  static HEParams with_slots(std::size_t slots, int log_q = 990, int log_p = 45);

  std::size_t slots() const { return std::size_t{1} << (log_n - 1); }
  int max_level() const { return log_q / log_p; }

  void validate() const;

  bool operator==(const HEParams&) const = default;
};

struct OpCounts {
  std::uint64_t n_add = 0;
  std::uint64_t n_mult = 0;
  std::uint64_t n_cmult = 0;
  std::uint64_t n_rot = 0;
  std::uint64_t n_rescale = 0;
  std::uint64_t n_bootstrap = 0;

  OpCounts operator-(const OpCounts& o) const;
  OpCounts operator+(const OpCounts& o) const;
  bool operator==(const OpCounts&) const = default;
};

/// Number of ciphertext objects currently alive in the process and the
/// high-water mark since the last reset. Used as a memory proxy by the
/// matmul benchmark.
std::int64_t live_ciphertexts();
std::int64_t peak_ciphertexts();
void reset_peak_ciphertexts();

namespace detail {
struct LiveToken {
  LiveToken();
  LiveToken(const LiveToken&);
  LiveToken(LiveToken&&) noexcept;
  LiveToken& operator=(const LiveToken&) = default;
  LiveToken& operator=(LiveToken&&) noexcept = default;
  ~LiveToken();
};
}  // namespace detail

struct Ciphertext {
  std::vector<double> slots;
  int level = 0;
  int scale_exp = 1;

  std::size_t size() const { return slots.size(); }

 private:
  detail::LiveToken token_;
};

/// Slot-wise kernels. The default versions split the slot range across
/// OpenMP threads once the vector is long enough to pay for it; the
/// serial versions are the reference the parallel ones are tested against.
namespace kernels {
void add(std::span<const double> a, std::span<const double> b, std::span<double> out);
void sub(std::span<const double> a, std::span<const double> b, std::span<double> out);
void mul(std::span<const double> a, std::span<const double> b, std::span<double> out);
void rotate(std::span<const double> a, std::ptrdiff_t k, std::span<double> out);

namespace serial {
void add(std::span<const double> a, std::span<const double> b, std::span<double> out);
void sub(std::span<const double> a, std::span<const double> b, std::span<double> out);
void mul(std::span<const double> a, std::span<const double> b, std::span<double> out);
void rotate(std::span<const double> a, std::ptrdiff_t k, std::span<double> out);
}  // namespace serial
}  // namespace kernels

/// Evaluation context: owns the parameters and the operation counters for
/// one computation. Operations are const on their inputs and safe to call
/// concurrently; the counters are atomic.
class Evaluator {
 public:
  explicit Evaluator(HEParams params);

  Evaluator(const Evaluator&) = delete;
  Evaluator& operator=(const Evaluator&) = delete;

  const HEParams& params() const { return params_; }
  std::size_t slots() const { return slots_; }
  int max_level() const { return max_level_; }

  Ciphertext enc(std::span<const double> v) const;
  std::vector<double> dec(const Ciphertext& ct) const;

  /// Ciphertext holding `value` in every slot at the given level. Models a
  /// public constant encoded at a chosen level; no operation is counted.
  Ciphertext constant(double value, int level) const;

  Ciphertext add(const Ciphertext& a, const Ciphertext& b);
  Ciphertext sub(const Ciphertext& a, const Ciphertext& b);
  /// Adds a plaintext vector (zero padded). No level consumed.
  Ciphertext add_const(const Ciphertext& ct, std::span<const double> c);
  Ciphertext add_scalar(const Ciphertext& ct, double c);

  Ciphertext mult(const Ciphertext& a, const Ciphertext& b);
  Ciphertext cmult(const Ciphertext& ct, std::span<const double> c);
  Ciphertext cmult(const Ciphertext& ct, double c);

  /// Product without the implicit rescale: scale exponents add and the
  /// level is kept. Pair with rescale().
  Ciphertext mult_raw(const Ciphertext& a, const Ciphertext& b);
  Ciphertext rescale(const Ciphertext& ct);

  /// Cyclic left shift by k (negative k shifts right).
  Ciphertext rot(const Ciphertext& ct, std::ptrdiff_t k);
  Ciphertext bootstrap(const Ciphertext& ct);

  OpCounts counts() const;
  void reset_counts();

 private:
  void check(const Ciphertext& ct) const;
  void check_pair(const Ciphertext& a, const Ciphertext& b) const;
  std::vector<double> padded(std::span<const double> c) const;

  HEParams params_;
  std::size_t slots_;
  int max_level_;

  std::atomic<std::uint64_t> n_add_{0};
  std::atomic<std::uint64_t> n_mult_{0};
  std::atomic<std::uint64_t> n_cmult_{0};
  std::atomic<std::uint64_t> n_rot_{0};
  std::atomic<std::uint64_t> n_rescale_{0};
  std::atomic<std::uint64_t> n_bootstrap_{0};
};

}  // namespace revolver::he
