#include <random>

#include "doctest.h"
#include "oracle.hpp"
#include "revolver/matmul.hpp"

using namespace revolver;
using namespace revolver::mm;
using he::Evaluator;
using he::HEParams;

namespace {

struct Operands {
  PackedMatrix a, bt;
};

Operands pack_second(Evaluator& ev, const Matrix& a, const Matrix& b, std::size_t pc) {
  return {enc::pack_row_major(ev, a, pc), enc::pack_replicated(ev, b.transpose(), pc)};
}

}  // namespace

TEST_CASE("vr_mult on the 4x2 by 2x2 case") {
  Evaluator ev(HEParams::with_slots(16));
  std::mt19937_64 rng(1);
  const Matrix a = oracle::uniform(4, 2, rng), b = oracle::uniform(2, 2, rng);
  const auto ops = pack_second(ev, a, b, 4);
  REQUIRE(ops.a.team_size() == 1);
  const auto c = vr_mult(ev, ops.a, ops.bt);
  CHECK(oracle::max_abs_diff(oracle::matmul(oracle::to_rows(a), oracle::to_rows(b)), unpack(ev, c)) < 1e-9);
  CHECK(c.min_level() == ev.max_level() - 2);
  CHECK_FALSE(c.is_transposed);
}

TEST_CASE("identity and zero operands") {
  Evaluator ev(HEParams::with_slots(16));
  std::mt19937_64 rng(2);
  const Matrix b = oracle::uniform(2, 2, rng);
  auto ops = pack_second(ev, Matrix::Identity(2, 2), b, 4);
  CHECK(oracle::max_abs_diff(oracle::to_rows(b), unpack(ev, vr_mult(ev, ops.a, ops.bt))) < 1e-12);
  ops = pack_second(ev, oracle::uniform(4, 2, rng), Matrix::Zero(2, 2), 4);
  CHECK(unpack(ev, vr_mult(ev, ops.a, ops.bt)) == Matrix::Zero(4, 2));
}

TEST_CASE("depth is two with padding slack and three without") {
  Evaluator ev(HEParams::with_slots(64));
  std::mt19937_64 rng(3);
  const Matrix a = oracle::uniform(4, 4, rng), b = oracle::uniform(4, 3, rng);
  const auto want = oracle::matmul(oracle::to_rows(a), oracle::to_rows(b));
  auto slack = pack_second(ev, a, b, 8);
  auto c = vr_mult(ev, slack.a, slack.bt);
  CHECK(c.min_level() == ev.max_level() - 2);
  CHECK(oracle::max_abs_diff(want, unpack(ev, c)) < 1e-9);
  auto tight = pack_second(ev, a, b, 4);
  c = vr_mult(ev, tight.a, tight.bt);
  CHECK(c.min_level() == ev.max_level() - 3);
  CHECK(oracle::max_abs_diff(want, unpack(ev, c)) < 1e-9);
}

TEST_CASE("output offset and scale") {
  Evaluator ev(HEParams::with_slots(64));
  std::mt19937_64 rng(4);
  const Matrix a = oracle::uniform(5, 3, rng), b = oracle::uniform(3, 2, rng);
  const auto ops = pack_second(ev, a, b, 8);
  const auto c = vr_mult(ev, ops.a, ops.bt, {.out_col_offset = 2, .scale = -0.5});
  const Matrix got = unpack(ev, c);
  CHECK(got.cols() == 4);
  CHECK(got.leftCols(2) == Matrix::Zero(5, 2));
  auto want = oracle::matmul(oracle::to_rows(a), oracle::to_rows(b));
  for (auto& row : want)
    for (auto& v : row) v *= -0.5;
  CHECK(oracle::max_abs_diff(want, got.rightCols(2)) < 1e-12);
  CHECK_THROWS_AS(vr_mult(ev, ops.a, ops.bt, {.out_col_offset = 7}), ShapeMismatch);
}

TEST_CASE("shape errors") {
  Evaluator ev(HEParams::with_slots(64));
  std::mt19937_64 rng(5);
  const auto a = enc::pack_row_major(ev, oracle::uniform(4, 3, rng), 8);
  const auto bt = enc::pack_replicated(ev, oracle::uniform(2, 4, rng), 8);
  CHECK_THROWS_AS(vr_mult(ev, a, bt), ShapeMismatch);
  const auto plain_bt = enc::pack_row_major(ev, oracle::uniform(2, 3, rng), 8);
  CHECK_THROWS_AS(vr_mult(ev, a, plain_bt), ShapeMismatch);
  const auto other_pc = enc::pack_replicated(ev, oracle::uniform(2, 3, rng), 4);
  CHECK_THROWS_AS(vr_mult(ev, a, other_pc), ShapeMismatch);
}

TEST_CASE("level exhaustion propagates out of the parallel loop") {
  Evaluator ev(HEParams::with_slots(64, 45, 45));
  std::mt19937_64 rng(6);
  const Matrix a = oracle::uniform(20, 3, rng), b = oracle::uniform(3, 2, rng);
  const auto ops = pack_second(ev, a, b, 8);
  REQUIRE(ops.a.team_size() == 3);
  CHECK_THROWS_AS(dvr_mult(ev, ops.a, ops.bt), LevelExhausted);
}

TEST_CASE("plan_matmul") {
  const auto full = HEParams::full_scale();
  auto plan = plan_matmul(full, 128, 401, 10);
  CHECK(plan.padded_cols == 512);
  CHECK(plan.team_a_size == 2);
  CHECK(plan.team_b_size == 1);
  CHECK(plan.vertical_splits == 1);
  plan = plan_matmul(full, 128, 401, 10, TransposedSide::second, 256);
  CHECK(plan.vertical_splits == 2);
  plan = plan_matmul(HEParams::with_slots(1024), 100, 60, 40);
  CHECK(plan.padded_cols == 128);
  CHECK(plan.team_a_size == 13);
  CHECK(plan.team_b_size == 5);
  plan = plan_matmul(HEParams::with_slots(1024), 6, 3, 5, TransposedSide::first);
  CHECK(plan.padded_cols == 8);
  CHECK_THROWS_AS(plan_matmul(HEParams::with_slots(16), 2, 17, 2), MatrixTooWide);
}

TEST_CASE("dvr_mult on the 128x401 by 401x10 shape") {
  Evaluator ev(HEParams::full_scale());
  std::mt19937_64 rng(7);
  const Matrix a = oracle::uniform(128, 401, rng), b = oracle::uniform(401, 10, rng);
  const auto plan = plan_matmul(ev.params(), 128, 401, 10);
  const auto ops = pack_second(ev, a, b, plan.padded_cols);
  CHECK(ops.a.team_size() == 2);
  const auto c = dvr_mult(ev, ops.a, ops.bt);
  CHECK(oracle::max_abs_diff(oracle::matmul(oracle::to_rows(a), oracle::to_rows(b)), unpack(ev, c)) < 1e-9);
  CHECK(c.min_level() == ev.max_level() - 2);
}

TEST_CASE("dvr_mult with team sizes (1,1) reduces to vr_mult") {
  Evaluator ev(HEParams::with_slots(64));
  std::mt19937_64 rng(8);
  const auto ops = pack_second(ev, oracle::uniform(6, 3, rng), oracle::uniform(3, 4, rng), 8);
  ev.reset_counts();
  const auto x = vr_mult(ev, ops.a, ops.bt);
  const auto vr_ops = ev.counts();
  ev.reset_counts();
  const auto y = dvr_mult(ev, ops.a, ops.bt);
  CHECK(ev.counts() == vr_ops);
  CHECK(unpack(ev, x) == unpack(ev, y));
}

TEST_CASE("dvr_mult on 100x60 by 60x40 at 1024 slots") {
  Evaluator ev(HEParams::with_slots(1024));
  std::mt19937_64 rng(9);
  const Matrix a = oracle::uniform(100, 60, rng), b = oracle::uniform(60, 40, rng);
  const auto want = oracle::matmul(oracle::to_rows(a), oracle::to_rows(b));
  // (13,5) teams at padded width 128, (7,3) teams at padded width 64.
  for (std::size_t pc : {128u, 64u}) {
    const auto ops = pack_second(ev, a, b, pc);
    const std::size_t rows = 1024 / pc;
    CHECK(ops.a.team_size() == (100 + rows - 1) / rows);
    CHECK(ops.bt.team_size() == (40 + rows - 1) / rows);
    CHECK(oracle::max_abs_diff(want, unpack(ev, dvr_mult(ev, ops.a, ops.bt))) < 1e-9);
  }
}

TEST_CASE("dvr_mult op counts scale with the number of block pairs") {
  Evaluator ev(HEParams::with_slots(256));
  std::mt19937_64 rng(10);
  // 8 rows per ciphertext, B blocks full so every block product does the
  // same work.
  const Matrix b = oracle::uniform(8, 16, rng);
  he::OpCounts unit;
  for (std::size_t ta : {1u, 2u, 3u}) {
    const auto ops = pack_second(ev, oracle::uniform(8 * ta, 8, rng), b, 32);
    REQUIRE(ops.bt.team_size() == 2);
    ev.reset_counts();
    (void)dvr_mult(ev, ops.a, ops.bt, {.exec = Exec::serial});
    const auto c = ev.counts();
    if (ta == 1) {
      unit = c;
    } else {
      CHECK(c.n_mult == unit.n_mult * ta);
      CHECK(c.n_cmult == unit.n_cmult * ta);
      CHECK(c.n_rot == unit.n_rot * ta);
    }
  }
  // One pair is 8 steps of one mult each.
  CHECK(unit.n_mult == 2 * 8);
}

TEST_CASE("serial and parallel execution agree bit for bit") {
  Evaluator ev(HEParams::with_slots(512));
  std::mt19937_64 rng(11);
  const auto ops = pack_second(ev, oracle::uniform(70, 12, rng), oracle::uniform(12, 9, rng), 32);
  const auto s = unpack(ev, dvr_mult(ev, ops.a, ops.bt, {.exec = Exec::serial}));
  const auto p = unpack(ev, dvr_mult(ev, ops.a, ops.bt, {.exec = Exec::parallel}));
  CHECK(s == p);
}

TEST_CASE("vertical partitioning") {
  Evaluator ev(HEParams::full_scale());
  std::mt19937_64 rng(12);
  const Matrix a = oracle::uniform(128, 401, rng), b = oracle::uniform(401, 10, rng);
  const auto chunks = pack_vertical(ev, a, 256, 512);
  REQUIRE(chunks.size() == 2);
  CHECK(chunks[0].shape.cols == 256);
  CHECK(chunks[1].shape.cols == 145);
  const auto bt_chunks = pack_vertical(ev, b.transpose(), 256, 512, true);
  const auto c = dvr_mult_vertical(ev, chunks, bt_chunks);
  CHECK(oracle::max_abs_diff(oracle::matmul(oracle::to_rows(a), oracle::to_rows(b)), unpack(ev, c)) < 1e-9);

  const auto single = pack_vertical(ev, b.transpose(), 512);
  REQUIRE(single.size() == 1);
  CHECK(unpack(ev, single[0]) == unpack(ev, enc::pack_row_major(ev, b.transpose())));
  CHECK_THROWS_AS(pack_vertical(ev, a, 300), ShapeMismatch);
}

TEST_CASE("transposed-first variant") {
  Evaluator ev(HEParams::with_slots(64));
  std::mt19937_64 rng(13);
  const Matrix a = oracle::uniform(2, 3, rng), b = oracle::uniform(3, 2, rng);
  const auto at = enc::pack_row_major(ev, a.transpose(), 2);
  const auto bp = enc::pack_row_major(ev, b, 2);
  const auto c = vr_mult_transposed_first(ev, at, bp);
  const auto want = oracle::matmul(oracle::to_rows(a), oracle::to_rows(b));
  CHECK(oracle::max_abs_diff(want, unpack(ev, c)) < 1e-9);
  CHECK(c.min_level() == ev.max_level() - 3);

  const auto ops = pack_second(ev, a, b, 8);
  CHECK(oracle::max_abs_diff(oracle::to_rows(unpack(ev, vr_mult(ev, ops.a, ops.bt))), unpack(ev, c)) < 1e-12);

  const auto zero = enc::pack_row_major(ev, Matrix::Zero(3, 2), 2);
  CHECK(unpack(ev, vr_mult_transposed_first(ev, zero, bp)) == Matrix::Zero(2, 2));
  const auto bad = enc::pack_row_major(ev, Matrix::Zero(4, 2), 2);
  CHECK_THROWS_AS(vr_mult_transposed_first(ev, bad, bp), ShapeMismatch);
}

TEST_CASE("transposed-first over teams, with offset and replicated output") {
  Evaluator ev(HEParams::with_slots(128));
  std::mt19937_64 rng(14);
  // Aᵀ carries an extra leading column that the offset skips.
  const Matrix at_full = oracle::uniform(45, 6, rng), b = oracle::uniform(45, 5, rng);
  const Matrix a = at_full.rightCols(5).transpose();
  const auto at = enc::pack_row_major(ev, at_full, 8);
  const auto bp = enc::pack_row_major(ev, b, 8);
  REQUIRE(at.team_size() == 3);
  const auto c = vr_mult_transposed_first(
      ev, at, bp, {.at_col_offset = 1, .scale = 2.0, .replicated_out = true});
  CHECK(c.replicated);
  auto want = oracle::matmul(oracle::to_rows(a), oracle::to_rows(b));
  for (auto& row : want)
    for (auto& v : row) v *= 2.0;
  CHECK(oracle::max_abs_diff(want, unpack(ev, c)) < 1e-9);
  const auto ref = enc::pack_replicated(ev, unpack(ev, c), 8);
  const auto got = ev.dec(c.cts[0]);
  const auto exp = ev.dec(ref.cts[0]);
  for (std::size_t i = 0; i < got.size(); ++i) CHECK(std::abs(got[i] - exp[i]) < 1e-9);
}

TEST_CASE("broadcast_mult") {
  Evaluator ev(HEParams::with_slots(256));
  std::mt19937_64 rng(15);
  // A: 40 x (1 + 6) with the operand in columns [1, 7); B: 6 x 9 replicated.
  const Matrix a_full = oracle::uniform(40, 7, rng), b = oracle::uniform(6, 9, rng);
  const auto a = enc::pack_row_major(ev, a_full, 16);
  const auto bp = enc::pack_replicated(ev, b, 16, false);
  const auto c = broadcast_mult(ev, a, bp, {.a_col_offset = 1, .b_col_begin = 1, .scale = 0.5});
  CHECK(c.min_level() == ev.max_level() - 2);
  const Matrix got = unpack(ev, c);
  CHECK(got.cols() == 9);
  const auto want = oracle::matmul(oracle::to_rows(a_full.rightCols(6)), oracle::to_rows(b));
  for (long i = 0; i < 40; ++i) {
    CHECK(got(i, 0) == 0.0);
    for (long j = 1; j < 9; ++j) CHECK(std::abs(got(i, j) - 0.5 * want[i][j]) < 1e-12);
  }
  CHECK_THROWS_AS(broadcast_mult(ev, a, enc::pack_row_major(ev, b, 16)), ShapeMismatch);
}

TEST_CASE("randomized oracle sweep") {
  std::mt19937_64 rng(16);
  std::uniform_int_distribution<int> dim(1, 24);
  int cases = 0;
  for (std::size_t slots : {64u, 256u, 1024u}) {
    Evaluator ev(HEParams::with_slots(slots));
    for (int t = 0; t < 40; ++t) {
      const std::size_t m = dim(rng), n = dim(rng), p = dim(rng);
      if (enc::next_pow2(std::max({m, n, p})) > slots) continue;
      const Matrix a = oracle::uniform(m, n, rng), b = oracle::uniform(n, p, rng);
      const auto want = oracle::matmul(oracle::to_rows(a), oracle::to_rows(b));
      const auto plan = plan_matmul(ev.params(), m, n, p);
      if (plan.padded_cols < p) continue;
      const auto ops = pack_second(ev, a, b, plan.padded_cols);
      CHECK(oracle::max_abs_diff(want, unpack(ev, dvr_mult(ev, ops.a, ops.bt))) < 1e-9);
      const std::size_t pc = enc::next_pow2(std::max(m, p));
      const auto at = enc::pack_row_major(ev, a.transpose(), pc);
      const auto bp = enc::pack_row_major(ev, b, pc);
      CHECK(oracle::max_abs_diff(want, unpack(ev, vr_mult_transposed_first(ev, at, bp))) < 1e-9);
      ++cases;
    }
  }
  CHECK(cases > 60);
}
