#pragma once

// Row-major matrix packing and the rotation primitives built on it.
//
// A matrix with `cols` columns is padded to `padded_cols` (a power of two)
// and rows are laid end to end, so one ciphertext holds
// rows_per_ct = slots / padded_cols rows. Taller matrices become a team of
// ciphertexts. Padding slots are zero after packing.

#include <cstddef>
#include <functional>
#include <vector>

#include "revolver/he.hpp"
#include "revolver/matrix.hpp"

namespace revolver::enc {

struct MatrixShape {
  std::size_t rows = 1;
  std::size_t cols = 1;
  bool operator==(const MatrixShape&) const = default;
};

struct PackedMatrix {
  std::vector<he::Ciphertext> cts;
  MatrixShape shape;
  std::size_t padded_cols = 1;
  std::size_t rows_per_ct = 1;
  /// The ciphertexts hold the transpose of the logical operand.
  bool is_transposed = false;
  /// Each ciphertext repeats its block of rows cyclically with period
  /// period(q), filling every row of the ciphertext. This is the layout of
  /// the rotating operand in Volley Revolver multiplication.
  bool replicated = false;

  std::size_t team_size() const { return cts.size(); }
  /// Number of matrix rows stored in ciphertext q.
  std::size_t rows_in(std::size_t q) const;
  /// Row period inside ciphertext q (rows_per_ct unless replicated).
  std::size_t period(std::size_t q) const;
  int min_level() const;
};

std::size_t next_pow2(std::size_t x);

/// Packs M row-major. padded_cols = 0 selects the smallest power of two
/// >= cols; a larger power of two may be requested to leave headroom.
PackedMatrix pack_row_major(he::Evaluator& ev, const Matrix& m, std::size_t padded_cols = 0);

/// Packs M with each ciphertext's rows repeated cyclically (see
/// PackedMatrix::replicated). Used for the transposed right-hand operand.
PackedMatrix pack_replicated(he::Evaluator& ev, const Matrix& m, std::size_t padded_cols = 0,
                             bool is_transposed = true);

Matrix unpack(const he::Evaluator& ev, const PackedMatrix& pm);

/// Row i of the result is row (i + k) mod rows of the input. A plain slot
/// rotation when the matrix fills its ciphertext; otherwise the wrap is
/// stitched with two masks and costs one level.
PackedMatrix row_shift_complete(he::Evaluator& ev, const PackedMatrix& pm, std::ptrdiff_t k);

/// Raw slot rotation by k: columns move left and spill into the next row.
PackedMatrix col_shift_incomplete(he::Evaluator& ev, const PackedMatrix& pm, std::ptrdiff_t k);

/// Column j of each row becomes column (j + k) mod cols. Two rotations, two
/// masks and one addition per ciphertext; one level.
PackedMatrix col_shift_complete(he::Evaluator& ev, const PackedMatrix& pm, std::ptrdiff_t k);

/// Every slot of row i (including its padding columns) holds sum_j M[i][j].
PackedMatrix sum_row_vec(he::Evaluator& ev, const PackedMatrix& pm);

/// Every valid slot of column j holds sum_i M[i][j] over the whole team.
PackedMatrix sum_col_vec(he::Evaluator& ev, const PackedMatrix& pm);

PackedMatrix bootstrap(he::Evaluator& ev, const PackedMatrix& pm);

/// Slot mask over one ciphertext of the given geometry: value(row, col) is
/// evaluated for every row < rows_per_ct and col < padded_cols.
std::vector<double> make_mask(std::size_t slots, std::size_t padded_cols,
                              const std::function<double(std::size_t, std::size_t)>& value);

}  // namespace revolver::enc
