#include <algorithm>
#include <random>
#include <thread>

#include "doctest.h"
#include "revolver/he.hpp"

using namespace revolver;
using namespace revolver::he;

namespace {
std::vector<double> first(const std::vector<double>& v, std::size_t n) {
  return {v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n)};
}
}  // namespace

TEST_CASE("full-scale parameters") {
  const auto p = HEParams::full_scale();
  CHECK(p.slots() == 32768);
  CHECK(p.max_level() == 22);
  CHECK(HEParams::with_slots(1024).slots() == 1024);
  CHECK_THROWS_AS(HEParams::with_slots(1000), ParamMismatch);
  CHECK_THROWS_AS((HEParams{4, 10, 45}.validate()), ParamMismatch);
}

TEST_CASE("enc pads and dec roundtrips") {
  Evaluator ev(HEParams::with_slots(4));
  const auto ct = ev.enc(std::vector<double>{1, 2});
  CHECK(ev.dec(ct) == std::vector<double>{1, 2, 0, 0});
  CHECK(ct.level == 22);
  CHECK_THROWS_AS(ev.enc(std::vector<double>(5, 1.0)), VectorTooLong);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-5, 5);
  std::vector<double> v(4);
  for (auto& x : v) x = u(rng);
  CHECK(ev.dec(ev.enc(v)) == v);
}

TEST_CASE("add aligns levels") {
  Evaluator ev(HEParams::with_slots(4));
  auto a = ev.enc(std::vector<double>{1, 2});
  auto b = ev.enc(std::vector<double>{3, 4});
  CHECK(first(ev.dec(ev.add(a, b)), 2) == std::vector<double>{4, 6});
  b = ev.cmult(ev.cmult(b, 1.0), 1.0);
  CHECK(b.level == 20);
  CHECK(ev.add(a, b).level == 20);
  CHECK(ev.dec(ev.add(a, ev.enc(std::vector<double>{}))) == ev.dec(a));
  CHECK(ev.counts().n_add == 3);
}

TEST_CASE("add rejects mismatched scales") {
  Evaluator ev(HEParams::with_slots(4));
  auto a = ev.enc(std::vector<double>{1});
  auto raw = ev.mult_raw(a, a);
  CHECK(raw.scale_exp == 2);
  CHECK_THROWS_AS(ev.add(a, raw), ParamMismatch);
  Evaluator other(HEParams::with_slots(8));
  CHECK_THROWS_AS(ev.add(a, other.enc(std::vector<double>{1})), ParamMismatch);
}

TEST_CASE("mult consumes one level") {
  Evaluator ev(HEParams::with_slots(4));
  auto a = ev.enc(std::vector<double>{2, 3});
  auto b = ev.enc(std::vector<double>{4, 5});
  auto c = ev.mult(a, b);
  CHECK(first(ev.dec(c), 2) == std::vector<double>{8, 15});
  CHECK(c.level == 21);
  CHECK(ev.counts().n_mult == 1);
  CHECK(ev.counts().n_rescale == 1);

  auto x = ev.enc(std::vector<double>{1, 1, 1, 1});
  for (int i = 0; i < 22; ++i) x = ev.mult(x, x);
  CHECK(x.level == 0);
  CHECK_THROWS_AS(ev.mult(x, x), LevelExhausted);
  CHECK_THROWS_AS(ev.cmult(x, 2.0), LevelExhausted);
}

TEST_CASE("cmult masks and splices") {
  Evaluator ev(HEParams::with_slots(4));
  auto a = ev.enc(std::vector<double>{1, 2, 3, 4});
  auto lo = ev.cmult(a, std::vector<double>{1, 1, 0, 0});
  CHECK(ev.dec(lo) == std::vector<double>{1, 2, 0, 0});
  CHECK(lo.level == 21);
  CHECK(ev.dec(ev.cmult(a, std::vector<double>{1, 1, 1, 1})) == ev.dec(a));
  auto b = ev.enc(std::vector<double>{5, 6, 7, 8});
  auto hi = ev.cmult(b, std::vector<double>{0, 0, 1, 1});
  CHECK(ev.dec(ev.add(lo, hi)) == std::vector<double>{1, 2, 7, 8});
}

TEST_CASE("rotation") {
  Evaluator ev(HEParams::with_slots(4));
  auto a = ev.enc(std::vector<double>{1, 2, 3, 4});
  CHECK(ev.dec(ev.rot(a, 1)) == std::vector<double>{2, 3, 4, 1});
  CHECK(ev.dec(ev.rot(a, -1)) == std::vector<double>{4, 1, 2, 3});
  CHECK(ev.dec(ev.rot(a, 4)) == ev.dec(a));
  CHECK(ev.dec(ev.rot(ev.rot(a, 3), 2)) == ev.dec(ev.rot(a, 5)));
  CHECK(ev.rot(a, 1).level == a.level);
  auto sorted = ev.dec(ev.rot(a, 3));
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == ev.dec(a));
}

TEST_CASE("rescale and bootstrap") {
  Evaluator ev(HEParams::with_slots(4));
  auto a = ev.enc(std::vector<double>{1, 2});
  auto raw = ev.mult_raw(a, a);
  auto r = ev.rescale(raw);
  CHECK(r.scale_exp == 1);
  CHECK(r.level == 21);
  CHECK_THROWS_AS(ev.rescale(a), ParamMismatch);

  auto x = a;
  for (int i = 0; i < 22; ++i) x = ev.cmult(x, 1.0);
  auto raw0 = ev.mult_raw(x, x);
  CHECK_THROWS_AS(ev.rescale(raw0), LevelExhausted);
  auto fresh = ev.bootstrap(x);
  CHECK(fresh.level == 22);
  CHECK(ev.dec(fresh) == ev.dec(x));
  CHECK(ev.counts().n_bootstrap == 1);
}

TEST_CASE("expression tree matches slot-wise plaintext") {
  Evaluator ev(HEParams::with_slots(64));
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-10, 10);
  std::vector<double> a(64), b(64), c(64);
  for (std::size_t i = 0; i < 64; ++i) a[i] = u(rng), b[i] = u(rng), c[i] = u(rng);
  // ((a*b) + rot(c, 3)) * c  -> depth 2
  auto r = ev.mult(ev.add(ev.mult(ev.enc(a), ev.enc(b)), ev.rot(ev.enc(c), 3)), ev.enc(c));
  const auto got = ev.dec(r);
  for (std::size_t i = 0; i < 64; ++i) {
    const double want = (a[i] * b[i] + c[(i + 3) % 64]) * c[i];
    CHECK(std::abs(got[i] - want) < 1e-9);
  }
  CHECK(r.level == 20);
}

TEST_CASE("parallel kernels match serial reference") {
  const std::size_t n = 1 << 15;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> a(n), b(n), x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) a[i] = u(rng), b[i] = u(rng);
  kernels::add(a, b, x);
  kernels::serial::add(a, b, y);
  CHECK(x == y);
  kernels::sub(a, b, x);
  kernels::serial::sub(a, b, y);
  CHECK(x == y);
  kernels::mul(a, b, x);
  kernels::serial::mul(a, b, y);
  CHECK(x == y);
  for (std::ptrdiff_t k : {std::ptrdiff_t{0}, std::ptrdiff_t{1}, std::ptrdiff_t{-7}, std::ptrdiff_t{12345}, static_cast<std::ptrdiff_t>(n) + 3}) {
    kernels::rotate(a, k, x);
    kernels::serial::rotate(a, k, y);
    CHECK(x == y);
  }
}

TEST_CASE("counters are race free") {
  Evaluator ev(HEParams::with_slots(16));
  const auto ct = ev.enc(std::vector<double>(16, 1.0));
  std::vector<std::thread> pool;
  for (int t = 0; t < 4; ++t)
    pool.emplace_back([&] {
      for (int i = 0; i < 500; ++i) (void)ev.rot(ev.add(ct, ct), 1);
    });
  for (auto& th : pool) th.join();
  CHECK(ev.counts().n_add == 2000);
  CHECK(ev.counts().n_rot == 2000);
  ev.reset_counts();
  CHECK(ev.counts() == OpCounts{});
}

TEST_CASE("live ciphertext tracking") {
  Evaluator ev(HEParams::with_slots(4));
  const auto before = live_ciphertexts();
  {
    auto a = ev.enc(std::vector<double>{1});
    auto b = a;
    CHECK(live_ciphertexts() == before + 2);
  }
  CHECK(live_ciphertexts() == before);
  CHECK(peak_ciphertexts() >= before + 2);
}
