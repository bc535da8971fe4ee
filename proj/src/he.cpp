#include "revolver/he.hpp"

#include <algorithm>
#include <bit>
#include <string>

namespace revolver::he {

namespace {

constexpr std::size_t kParallelSlots = std::size_t{1} << 13;

std::atomic<std::int64_t> g_live{0};
std::atomic<std::int64_t> g_peak{0};

void bump_live() {
  const auto now = g_live.fetch_add(1, std::memory_order_relaxed) + 1;
  auto peak = g_peak.load(std::memory_order_relaxed);
  while (now > peak && !g_peak.compare_exchange_weak(peak, now, std::memory_order_relaxed)) {
  }
}

std::size_t wrap(std::ptrdiff_t k, std::size_t n) {
  const auto m = static_cast<std::ptrdiff_t>(n);
  return static_cast<std::size_t>(((k % m) + m) % m);
}

}  // namespace

namespace detail {
LiveToken::LiveToken() { bump_live(); }
LiveToken::LiveToken(const LiveToken&) { bump_live(); }
LiveToken::LiveToken(LiveToken&&) noexcept { bump_live(); }
LiveToken::~LiveToken() { g_live.fetch_sub(1, std::memory_order_relaxed); }
}  // namespace detail

std::int64_t live_ciphertexts() { return g_live.load(); }
std::int64_t peak_ciphertexts() { return g_peak.load(); }
void reset_peak_ciphertexts() { g_peak.store(g_live.load()); }

HEParams HEParams::with_slots(std::size_t slots, int log_q, int log_p) {
  if (slots < 2 || !std::has_single_bit(slots)) {
    throw ParamMismatch("slot count must be a power of two >= 2, got " + std::to_string(slots));
  }
  HEParams p;
  p.log_n = std::bit_width(slots);  // slots = 2^(log_n - 1)
  p.log_q = log_q;
  p.log_p = log_p;
  p.validate();
  return p;
}

void HEParams::validate() const {
  if (log_n < 2 || log_n > 30) throw ParamMismatch("log_n out of range: " + std::to_string(log_n));
  if (log_p < 1) throw ParamMismatch("log_p must be positive");
  if (max_level() < 1) {
    throw ParamMismatch("log_q / log_p must allow at least one level");
  }
}

OpCounts OpCounts::operator-(const OpCounts& o) const {
  return {n_add - o.n_add,       n_mult - o.n_mult,         n_cmult - o.n_cmult,
          n_rot - o.n_rot,       n_rescale - o.n_rescale,   n_bootstrap - o.n_bootstrap};
}

OpCounts OpCounts::operator+(const OpCounts& o) const {
  return {n_add + o.n_add,       n_mult + o.n_mult,         n_cmult + o.n_cmult,
          n_rot + o.n_rot,       n_rescale + o.n_rescale,   n_bootstrap + o.n_bootstrap};
}

namespace kernels {

namespace serial {
void add(std::span<const double> a, std::span<const double> b, std::span<double> out) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
}
void sub(std::span<const double> a, std::span<const double> b, std::span<double> out) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
}
void mul(std::span<const double> a, std::span<const double> b, std::span<double> out) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
}
void rotate(std::span<const double> a, std::ptrdiff_t k, std::span<double> out) {
  const std::size_t n = a.size();
  const std::size_t s = wrap(k, n);
  std::copy(a.begin() + static_cast<std::ptrdiff_t>(s), a.end(), out.begin());
  std::copy(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(s),
            out.begin() + static_cast<std::ptrdiff_t>(n - s));
}
}  // namespace serial

void add(std::span<const double> a, std::span<const double> b, std::span<double> out) {
  const auto n = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for simd if (out.size() >= kParallelSlots)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void sub(std::span<const double> a, std::span<const double> b, std::span<double> out) {
  const auto n = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for simd if (out.size() >= kParallelSlots)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void mul(std::span<const double> a, std::span<const double> b, std::span<double> out) {
  const auto n = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for simd if (out.size() >= kParallelSlots)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void rotate(std::span<const double> a, std::ptrdiff_t k, std::span<double> out) {
  const auto n = static_cast<std::ptrdiff_t>(a.size());
  const auto s = static_cast<std::ptrdiff_t>(wrap(k, a.size()));
#pragma omp parallel for if (a.size() >= kParallelSlots)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const std::ptrdiff_t j = i + s;
    out[i] = a[j < n ? j : j - n];
  }
}

}  // namespace kernels

Evaluator::Evaluator(HEParams params) : params_(params) {
  params_.validate();
  slots_ = params_.slots();
  max_level_ = params_.max_level();
}

void Evaluator::check(const Ciphertext& ct) const {
  if (ct.slots.size() != slots_) {
    throw ParamMismatch("ciphertext has " + std::to_string(ct.slots.size()) +
                        " slots, context expects " + std::to_string(slots_));
  }
}

void Evaluator::check_pair(const Ciphertext& a, const Ciphertext& b) const {
  check(a);
  check(b);
  if (a.scale_exp != b.scale_exp) {
    throw ParamMismatch("scale mismatch: " + std::to_string(a.scale_exp) + " vs " +
                        std::to_string(b.scale_exp));
  }
}

std::vector<double> Evaluator::padded(std::span<const double> c) const {
  if (c.size() > slots_) {
    throw VectorTooLong("plaintext of length " + std::to_string(c.size()) + " exceeds " +
                        std::to_string(slots_) + " slots");
  }
  std::vector<double> v(slots_, 0.0);
  std::copy(c.begin(), c.end(), v.begin());
  return v;
}

Ciphertext Evaluator::enc(std::span<const double> v) const {
  Ciphertext ct;
  ct.slots = padded(v);
  ct.level = max_level_;
  ct.scale_exp = 1;
  return ct;
}

std::vector<double> Evaluator::dec(const Ciphertext& ct) const {
  check(ct);
  return ct.slots;
}

Ciphertext Evaluator::constant(double value, int level) const {
  Ciphertext ct;
  ct.slots.assign(slots_, value);
  ct.level = std::clamp(level, 0, max_level_);
  ct.scale_exp = 1;
  return ct;
}

Ciphertext Evaluator::add(const Ciphertext& a, const Ciphertext& b) {
  check_pair(a, b);
  Ciphertext r;
  r.slots.resize(slots_);
  kernels::add(a.slots, b.slots, r.slots);
  r.level = std::min(a.level, b.level);
  r.scale_exp = a.scale_exp;
  n_add_.fetch_add(1, std::memory_order_relaxed);
  return r;
}

Ciphertext Evaluator::sub(const Ciphertext& a, const Ciphertext& b) {
  check_pair(a, b);
  Ciphertext r;
  r.slots.resize(slots_);
  kernels::sub(a.slots, b.slots, r.slots);
  r.level = std::min(a.level, b.level);
  r.scale_exp = a.scale_exp;
  n_add_.fetch_add(1, std::memory_order_relaxed);
  return r;
}

Ciphertext Evaluator::add_const(const Ciphertext& ct, std::span<const double> c) {
  check(ct);
  const auto pc = padded(c);
  Ciphertext r;
  r.slots.resize(slots_);
  kernels::add(ct.slots, pc, r.slots);
  r.level = ct.level;
  r.scale_exp = ct.scale_exp;
  n_add_.fetch_add(1, std::memory_order_relaxed);
  return r;
}

Ciphertext Evaluator::add_scalar(const Ciphertext& ct, double c) {
  check(ct);
  Ciphertext r = ct;
  for (auto& v : r.slots) v += c;
  n_add_.fetch_add(1, std::memory_order_relaxed);
  return r;
}

Ciphertext Evaluator::mult(const Ciphertext& a, const Ciphertext& b) {
  check(a);
  check(b);
  const int level = std::min(a.level, b.level);
  if (level < 1) throw LevelExhausted("mult at level 0: bootstrap required");
  Ciphertext r;
  r.slots.resize(slots_);
  kernels::mul(a.slots, b.slots, r.slots);
  r.level = level - 1;
  r.scale_exp = a.scale_exp + b.scale_exp - 1;
  n_mult_.fetch_add(1, std::memory_order_relaxed);
  n_rescale_.fetch_add(1, std::memory_order_relaxed);
  return r;
}

Ciphertext Evaluator::mult_raw(const Ciphertext& a, const Ciphertext& b) {
  check(a);
  check(b);
  Ciphertext r;
  r.slots.resize(slots_);
  kernels::mul(a.slots, b.slots, r.slots);
  r.level = std::min(a.level, b.level);
  r.scale_exp = a.scale_exp + b.scale_exp;
  n_mult_.fetch_add(1, std::memory_order_relaxed);
  return r;
}

Ciphertext Evaluator::cmult(const Ciphertext& ct, std::span<const double> c) {
  check(ct);
  if (ct.level < 1) throw LevelExhausted("cmult at level 0: bootstrap required");
  const auto pc = padded(c);
  Ciphertext r;
  r.slots.resize(slots_);
  kernels::mul(ct.slots, pc, r.slots);
  r.level = ct.level - 1;
  r.scale_exp = ct.scale_exp;
  n_cmult_.fetch_add(1, std::memory_order_relaxed);
  n_rescale_.fetch_add(1, std::memory_order_relaxed);
  return r;
}

Ciphertext Evaluator::cmult(const Ciphertext& ct, double c) {
  check(ct);
  if (ct.level < 1) throw LevelExhausted("cmult at level 0: bootstrap required");
  Ciphertext r = ct;
  for (auto& v : r.slots) v *= c;
  r.level = ct.level - 1;
  n_cmult_.fetch_add(1, std::memory_order_relaxed);
  n_rescale_.fetch_add(1, std::memory_order_relaxed);
  return r;
}

Ciphertext Evaluator::rescale(const Ciphertext& ct) {
  check(ct);
  if (ct.scale_exp < 2) throw ParamMismatch("rescale needs scale exponent >= 2");
  if (ct.level < 1) throw LevelExhausted("rescale at level 0: bootstrap required");
  Ciphertext r = ct;
  r.scale_exp -= 1;
  r.level -= 1;
  n_rescale_.fetch_add(1, std::memory_order_relaxed);
  return r;
}

Ciphertext Evaluator::rot(const Ciphertext& ct, std::ptrdiff_t k) {
  check(ct);
  Ciphertext r;
  r.slots.resize(slots_);
  kernels::rotate(ct.slots, k, r.slots);
  r.level = ct.level;
  r.scale_exp = ct.scale_exp;
  n_rot_.fetch_add(1, std::memory_order_relaxed);
  return r;
}

Ciphertext Evaluator::bootstrap(const Ciphertext& ct) {
  check(ct);
  Ciphertext r = ct;
  r.level = max_level_;
  n_bootstrap_.fetch_add(1, std::memory_order_relaxed);
  return r;
}

OpCounts Evaluator::counts() const {
  return {n_add_.load(), n_mult_.load(), n_cmult_.load(),
          n_rot_.load(), n_rescale_.load(), n_bootstrap_.load()};
}

void Evaluator::reset_counts() {
  n_add_ = 0;
  n_mult_ = 0;
  n_cmult_ = 0;
  n_rot_ = 0;
  n_rescale_ = 0;
  n_bootstrap_ = 0;
}

}  // namespace revolver::he
