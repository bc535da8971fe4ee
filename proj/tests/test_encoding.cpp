#include <random>

#include "doctest.h"
#include "oracle.hpp"
#include "revolver/encoding.hpp"

using namespace revolver;
using namespace revolver::enc;
using he::Evaluator;
using he::HEParams;

namespace {

Matrix from(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

// Row i of the result is row (i + k) mod rows.
Matrix rotate_rows(const Matrix& m, long k) {
  Matrix out(m.rows(), m.cols());
  for (long i = 0; i < m.rows(); ++i)
    for (long j = 0; j < m.cols(); ++j) out(i, j) = m(((i + k) % m.rows() + m.rows()) % m.rows(), j);
  return out;
}

Matrix rotate_cols(const Matrix& m, long k) {
  Matrix out(m.rows(), m.cols());
  for (long i = 0; i < m.rows(); ++i)
    for (long j = 0; j < m.cols(); ++j) out(i, j) = m(i, ((j + k) % m.cols() + m.cols()) % m.cols());
  return out;
}

}  // namespace

TEST_CASE("128x401 packs into two ciphertexts") {
  Evaluator ev(HEParams::full_scale());
  std::mt19937_64 rng(1);
  const auto pm = pack_row_major(ev, oracle::uniform(128, 401, rng));
  CHECK(pm.padded_cols == 512);
  CHECK(pm.rows_per_ct == 64);
  CHECK(pm.team_size() == 2);
}

TEST_CASE("packing layout and padding") {
  Evaluator ev(HEParams::with_slots(4));
  CHECK(ev.dec(pack_row_major(ev, from({{7}})).cts[0]) == std::vector<double>{7, 0, 0, 0});

  Evaluator ev16(HEParams::with_slots(16));
  std::mt19937_64 rng(2);
  const Matrix m = oracle::uniform(5, 3, rng);
  const auto pm = pack_row_major(ev16, m);
  CHECK(pm.padded_cols == 4);
  CHECK(pm.rows_per_ct == 4);
  CHECK(pm.team_size() == 2);
  CHECK(unpack(ev16, pm) == m);
  for (std::size_t q = 0; q < pm.team_size(); ++q) {
    const auto s = ev16.dec(pm.cts[q]);
    for (std::size_t slot = 0; slot < 16; ++slot) {
      const std::size_t r = q * 4 + slot / 4, c = slot % 4;
      if (r < 5 && c < 3) {
        CHECK(s[slot] == m(static_cast<long>(r), static_cast<long>(c)));
      } else {
        CHECK(s[slot] == 0.0);
      }
    }
  }
  CHECK_THROWS_AS(pack_row_major(ev, Matrix::Zero(1, 5)), MatrixTooWide);
  CHECK_THROWS_AS(pack_row_major(ev16, m, 3), ShapeMismatch);
}

TEST_CASE("team of two reassembles 128 rows in order") {
  Evaluator ev(HEParams::with_slots(1024));
  Matrix m(128, 10);
  for (long i = 0; i < 128; ++i)
    for (long j = 0; j < 10; ++j) m(i, j) = static_cast<double>(i * 100 + j);
  const auto pm = pack_row_major(ev, m, 16);
  CHECK(pm.team_size() == 2);
  CHECK(unpack(ev, pm) == m);
}

TEST_CASE("replicated packing repeats rows with a power-of-two period") {
  Evaluator ev(HEParams::with_slots(16));
  const Matrix m = from({{1, 2}, {3, 4}, {5, 6}});
  const auto pm = pack_replicated(ev, m, 2);
  CHECK(pm.period(0) == 4);
  const auto s = ev.dec(pm.cts[0]);
  const std::vector<double> want{1, 2, 3, 4, 5, 6, 0, 0, 1, 2, 3, 4, 5, 6, 0, 0};
  CHECK(s == want);
  CHECK(unpack(ev, pm) == m);
}

TEST_CASE("row shift, worked example") {
  Evaluator ev(HEParams::with_slots(16));
  const Matrix z = from({{10, 11, 12}, {20, 21, 22}, {30, 31, 32}, {40, 41, 42}});
  const auto out = unpack(ev, row_shift_complete(ev, pack_row_major(ev, z), 1));
  CHECK(out == from({{20, 21, 22}, {30, 31, 32}, {40, 41, 42}, {10, 11, 12}}));
}

TEST_CASE("row shift matches the permutation oracle for every k") {
  Evaluator ev(HEParams::with_slots(32));
  std::mt19937_64 rng(4);
  for (long rows : {3L, 4L, 5L, 8L}) {
    const Matrix m = oracle::uniform(static_cast<std::size_t>(rows), 3, rng);
    const auto pm = pack_row_major(ev, m);
    for (long k = -rows; k <= rows; ++k) {
      const auto shifted = row_shift_complete(ev, pm, k);
      CHECK(unpack(ev, shifted) == rotate_rows(m, k));
    }
  }
  const Matrix full = oracle::uniform(8, 4, rng);
  const auto pm = pack_row_major(ev, full);
  const auto before = pm.min_level();
  CHECK(row_shift_complete(ev, pm, 3).min_level() == before);
}

TEST_CASE("incomplete column shift spills into the next row") {
  Evaluator ev(HEParams::with_slots(16));
  const Matrix z = from({{10, 11, 12, 13}, {20, 21, 22, 23}, {30, 31, 32, 33}, {40, 41, 42, 43}});
  const auto pm = pack_row_major(ev, z);
  const auto out = unpack(ev, col_shift_incomplete(ev, pm, 1));
  CHECK(out.row(0) == from({{11, 12, 13, 20}}).row(0));
  CHECK(out.row(3) == from({{41, 42, 43, 10}}).row(0));
  CHECK(unpack(ev, col_shift_incomplete(ev, pm, 0)) == z);
  CHECK(unpack(ev, col_shift_incomplete(ev, col_shift_incomplete(ev, pm, 1), 1)) ==
        unpack(ev, col_shift_incomplete(ev, pm, 2)));
}

TEST_CASE("complete column shift") {
  Evaluator ev(HEParams::with_slots(32));
  const Matrix z = from({{10, 11, 12}, {20, 21, 22}});
  const auto pm = pack_row_major(ev, z);
  ev.reset_counts();
  const auto out = col_shift_complete(ev, pm, 1);
  CHECK(unpack(ev, out) == from({{11, 12, 10}, {21, 22, 20}}));
  const auto d = ev.counts();
  CHECK(d.n_rot == 2);
  CHECK(d.n_cmult == 2);
  CHECK(d.n_add == 1);
  CHECK(d.n_mult == 0);
  CHECK(out.min_level() == pm.min_level() - 1);

  ev.reset_counts();
  CHECK(unpack(ev, col_shift_complete(ev, pm, 0)) == z);
  CHECK(ev.counts() == he::OpCounts{});

  std::mt19937_64 rng(6);
  for (std::size_t cols : {1u, 3u, 4u, 5u}) {
    const Matrix m = oracle::uniform(7, cols, rng);
    const auto p = pack_row_major(ev, m);
    for (long k = 0; k < static_cast<long>(cols) * 2; ++k) {
      CHECK(unpack(ev, col_shift_complete(ev, p, k)) == rotate_cols(m, k));
    }
  }
}

TEST_CASE("complete column shift on a team counts per ciphertext") {
  Evaluator ev(HEParams::with_slots(16));
  std::mt19937_64 rng(8);
  const Matrix m = oracle::uniform(10, 3, rng);
  const auto pm = pack_row_major(ev, m);
  REQUIRE(pm.team_size() == 3);
  ev.reset_counts();
  const auto out = col_shift_complete(ev, pm, 2);
  CHECK(ev.counts().n_rot == 6);
  CHECK(ev.counts().n_cmult == 6);
  CHECK(ev.counts().n_add == 3);
  CHECK(unpack(ev, out) == rotate_cols(m, 2));
}

TEST_CASE("row and column sums") {
  Evaluator ev(HEParams::with_slots(16));
  const auto pm = pack_row_major(ev, from({{1, 2}, {3, 4}}));
  CHECK(unpack(ev, sum_row_vec(ev, pm)) == from({{3, 3}, {7, 7}}));
  CHECK(unpack(ev, sum_col_vec(ev, pm)) == from({{4, 6}, {4, 6}}));
  const auto zero = pack_row_major(ev, Matrix::Zero(3, 3));
  CHECK(unpack(ev, sum_row_vec(ev, zero)) == Matrix::Zero(3, 3));
  const Matrix row = from({{1.5, -2, 3}});
  CHECK(unpack(ev, sum_col_vec(ev, pack_row_major(ev, row))) == row);

  Evaluator big(HEParams::with_slots(128));
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix m = oracle::uniform(8, 8, rng, -100, 100);
    const auto rs = unpack(big, sum_row_vec(big, pack_row_major(big, m)));
    const auto cs = unpack(big, sum_col_vec(big, pack_row_major(big, m)));
    for (long i = 0; i < 8; ++i)
      for (long j = 0; j < 8; ++j) {
        double r = 0, c = 0;
        for (long t = 0; t < 8; ++t) r += m(i, t), c += m(t, j);
        CHECK(std::abs(rs(i, j) - r) < 1e-12);
        CHECK(std::abs(cs(i, j) - c) < 1e-12);
      }
  }
}

TEST_CASE("column sum over a team") {
  Evaluator ev(HEParams::with_slots(32));
  std::mt19937_64 rng(10);
  const Matrix m = oracle::uniform(19, 5, rng);
  const auto pm = pack_row_major(ev, m);
  REQUIRE(pm.team_size() == 5);
  const auto cs = unpack(ev, sum_col_vec(ev, pm));
  for (long j = 0; j < 5; ++j) {
    double want = 0;
    for (long i = 0; i < 19; ++i) want += m(i, j);
    for (long i = 0; i < 19; ++i) CHECK(std::abs(cs(i, j) - want) < 1e-12);
  }
}

TEST_CASE("sums need a level") {
  Evaluator ev(HEParams::with_slots(16, 90, 45));
  auto pm = pack_row_major(ev, from({{1, 2}}));
  pm.cts[0] = ev.cmult(ev.cmult(pm.cts[0], 1.0), 1.0);
  CHECK_THROWS_AS(sum_row_vec(ev, pm), LevelExhausted);
  CHECK_THROWS_AS(sum_col_vec(ev, pm), LevelExhausted);
  CHECK_THROWS_AS(col_shift_complete(ev, pm, 1), LevelExhausted);
  CHECK(bootstrap(ev, pm).min_level() == 2);
}
