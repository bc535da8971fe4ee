#pragma once

// Encrypted matrix products on row-major packed matrices.
//
// Volley Revolver: A is packed row-major, B enters transposed with its rows
// repeated cyclically through the ciphertext. Step k rotates the Bᵀ
// ciphertext up by k rows, multiplies slot-wise with A and sums each row, so
// row i of step k carries dot(A_i, Bᵀ_{(i+k) mod P}) = C[i][(i+k) mod P],
// P being the replication period. A mask drops each value into its column
// and the steps accumulate into C, laid out like A.
//
// Double Volley Revolver runs that kernel over every (A block, Bᵀ block)
// pair of two ciphertext teams. Blocks along A are independent and run in
// parallel; each output block reduces over Bᵀ blocks in a fixed order so the
// result is bit-reproducible.

#include <cstddef>
#include <vector>

#include "revolver/encoding.hpp"
#include "revolver/he.hpp"
#include "revolver/matrix.hpp"

namespace revolver::mm {

using enc::PackedMatrix;

enum class TransposedSide { second, first };
enum class Exec { serial, parallel };

struct MatMulPlan {
  std::size_t m = 0, n = 0, p = 0;
  std::size_t team_a_size = 1;
  std::size_t team_b_size = 1;
  std::size_t vertical_splits = 1;
  TransposedSide transposed_side = TransposedSide::second;
  /// Shared padded width of both operands.
  std::size_t padded_cols = 1;
};

/// Lays out A (m x n) times B (n x p). The padded width is the smallest
/// power of two leaving room for the two-level product path
/// (n + min(p, rows_per_ct) - 1 columns), unless that would not fit.
/// max_cols > 0 splits the inner dimension into vertical chunks.
MatMulPlan plan_matmul(const he::HEParams& params, std::size_t m, std::size_t n, std::size_t p,
                       TransposedSide side = TransposedSide::second, std::size_t max_cols = 0);

struct RevolverOptions {
  /// C's columns land at [out_col_offset, out_col_offset + p).
  std::size_t out_col_offset = 0;
  /// Folded into the placement masks, so scaling C is free.
  double scale = 1.0;
  Exec exec = Exec::parallel;
};

/// C = A * B from a single-ciphertext A and a single-ciphertext replicated
/// Bᵀ. Costs two levels when A has at least p - 1 zero padding columns,
/// three otherwise.
PackedMatrix vr_mult(he::Evaluator& ev, const PackedMatrix& a, const PackedMatrix& bt,
                     const RevolverOptions& opts = {});

/// Team version of vr_mult: one vr block product per (A ciphertext, Bᵀ
/// ciphertext) pair.
PackedMatrix dvr_mult(he::Evaluator& ev, const PackedMatrix& team_a, const PackedMatrix& team_bt,
                      const RevolverOptions& opts = {});

/// Splits the columns of M into chunks of at most max_cols (a power of
/// two), each packed on its own. All chunks share one padded width.
std::vector<PackedMatrix> pack_vertical(he::Evaluator& ev, const Matrix& m, std::size_t max_cols,
                                        std::size_t padded_cols = 0, bool replicated = false);

/// Sum over chunks of dvr_mult(a_chunks[c], bt_chunks[c]).
PackedMatrix dvr_mult_vertical(he::Evaluator& ev, const std::vector<PackedMatrix>& a_chunks,
                               const std::vector<PackedMatrix>& bt_chunks,
                               const RevolverOptions& opts = {});

struct TransposedFirstOptions {
  /// Column of Aᵀ holding row 0 of A.
  std::size_t at_col_offset = 0;
  double scale = 1.0;
  /// Emit C replicated, ready to serve as the Bᵀ operand of vr_mult.
  bool replicated_out = false;
  Exec exec = Exec::parallel;
};

/// C = A * B given Aᵀ (n x m) and B (n x p), both row-major with matching
/// teams. Each row of C is a column broadcast of Aᵀ times B followed by a
/// column sum. Three levels.
PackedMatrix vr_mult_transposed_first(he::Evaluator& ev, const PackedMatrix& at,
                                      const PackedMatrix& b,
                                      const TransposedFirstOptions& opts = {});

struct BroadcastOptions {
  std::size_t a_col_offset = 0;
  /// Columns of B that are kept; the rest of C is zero.
  std::size_t b_col_begin = 0;
  std::size_t b_col_end = static_cast<std::size_t>(-1);
  double scale = 1.0;
  Exec exec = Exec::parallel;
};

/// C = A * B with A row-major (n x p) and B (p x w) in the replicated
/// layout; C[i][l] sits at column l like B. Used to push deltas back
/// through a weight matrix. Two levels.
PackedMatrix broadcast_mult(he::Evaluator& ev, const PackedMatrix& a, const PackedMatrix& b,
                            const BroadcastOptions& opts = {});

/// Slot-level building blocks shared with the training pipeline.
namespace kernels {

/// Every slot of row i becomes ct[i][col] for rows < rows; other rows zero.
he::Ciphertext broadcast_column(he::Evaluator& ev, const he::Ciphertext& ct,
                                std::size_t padded_cols, std::size_t rows, std::size_t col,
                                double scale = 1.0);

/// Every row becomes row `row` of the block (restricted to [col_begin,
/// col_end)); `period` is the block's replication period.
he::Ciphertext broadcast_row(he::Evaluator& ev, const he::Ciphertext& ct, std::size_t padded_cols,
                             std::size_t period, std::size_t row, std::size_t col_begin,
                             std::size_t col_end, double scale = 1.0);

}  // namespace kernels

}  // namespace revolver::mm
