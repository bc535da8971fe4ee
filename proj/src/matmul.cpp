#include "revolver/matmul.hpp"

#include <algorithm>
#include <exception>
#include <mutex>
#include <optional>
#include <string>

namespace revolver::mm {

namespace {

using he::Ciphertext;

std::ptrdiff_t as_diff(std::size_t v) { return static_cast<std::ptrdiff_t>(v); }

// Runs body(i) for i in [0, n), in parallel when asked. The first exception
// thrown by any iteration is rethrown on the calling thread.
template <typename Body>
void for_blocks(std::size_t n, Exec exec, Body&& body) {
  if (exec == Exec::serial || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex mu;
  const auto count = as_diff(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard lock(mu);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

Ciphertext accumulate(he::Evaluator& ev, std::optional<Ciphertext>& acc, Ciphertext part) {
  if (!acc) return part;
  return ev.add(*acc, part);
}

// One Volley Revolver block product: rows of `a` (rows_a valid rows) against
// a replicated Bᵀ block of rows_b rows with period `period`. Values land at
// column col_offset + c of row i.
Ciphertext revolver_block(he::Evaluator& ev, const Ciphertext& a, std::size_t rows_a,
                          const Ciphertext& bt, std::size_t rows_b, std::size_t period,
                          std::size_t inner, std::size_t pc, std::size_t col_offset,
                          double scale) {
  const std::size_t slots = ev.slots();
  // Right-rotate-and-add over a pc-wide window leaves the exact row sum in
  // every column j >= inner - 1 of the row, so placement needs one mask.
  const bool window = inner - 1 + rows_b <= pc;
  std::optional<Ciphertext> acc;
  for (std::size_t k = 0; k < period; ++k) {
    bool any = false;
    for (std::size_t i = 0; i < rows_a && !any; ++i) any = (i + k) % period < rows_b;
    if (!any) continue;

    const Ciphertext shifted = k == 0 ? bt : ev.rot(bt, as_diff(k * pc));
    Ciphertext prod = ev.mult(a, shifted);
    Ciphertext part;
    if (window) {
      for (std::size_t t = 1; t < pc; t <<= 1) prod = ev.add(prod, ev.rot(prod, -as_diff(t)));
      const auto mask = enc::make_mask(slots, pc, [&](std::size_t r, std::size_t c) {
        if (r >= rows_a) return 0.0;
        const std::size_t target = (r + k) % period;
        return (target < rows_b && c == inner - 1 + target) ? scale : 0.0;
      });
      part = ev.cmult(prod, mask);
    } else {
      for (std::size_t t = 1; t < pc; t <<= 1) prod = ev.add(prod, ev.rot(prod, as_diff(t)));
      const auto first = enc::make_mask(slots, pc, [&](std::size_t r, std::size_t c) {
        return (r < rows_a && c == 0) ? 1.0 : 0.0;
      });
      prod = ev.cmult(prod, first);
      for (std::size_t t = 1; t < pc; t <<= 1) prod = ev.add(prod, ev.rot(prod, -as_diff(t)));
      const auto place = enc::make_mask(slots, pc, [&](std::size_t r, std::size_t c) {
        if (r >= rows_a) return 0.0;
        const std::size_t target = (r + k) % period;
        return (target < rows_b && c == col_offset + target) ? scale : 0.0;
      });
      part = ev.cmult(prod, place);
    }
    acc = accumulate(ev, acc, std::move(part));
  }
  if (!acc) throw ShapeMismatch("revolver block has no rows to multiply");
  if (window) {
    const auto shift = as_diff(inner - 1) - as_diff(col_offset);
    if (shift != 0) acc = ev.rot(*acc, shift);
  }
  return *acc;
}

void check_revolver_operands(const PackedMatrix& a, const PackedMatrix& bt,
                             const RevolverOptions& opts) {
  if (a.shape.cols != bt.shape.cols) {
    throw ShapeMismatch("inner dimensions disagree: A has " + std::to_string(a.shape.cols) +
                        " columns, Bᵀ has " + std::to_string(bt.shape.cols));
  }
  if (a.padded_cols != bt.padded_cols) {
    throw ShapeMismatch("operands are packed with different padded widths");
  }
  if (!bt.replicated) throw ShapeMismatch("Bᵀ operand must be packed replicated");
  if (opts.out_col_offset + bt.shape.rows > a.padded_cols) {
    throw ShapeMismatch("product with " + std::to_string(bt.shape.rows) +
                        " columns does not fit the padded width " +
                        std::to_string(a.padded_cols));
  }
}

}  // namespace

namespace kernels {

Ciphertext broadcast_column(he::Evaluator& ev, const Ciphertext& ct, std::size_t padded_cols,
                            std::size_t rows, std::size_t col, double scale) {
  const auto mask = enc::make_mask(ev.slots(), padded_cols, [&](std::size_t r, std::size_t c) {
    return (r < rows && c == col) ? scale : 0.0;
  });
  Ciphertext out = ev.cmult(ct, mask);
  if (col != 0) out = ev.rot(out, as_diff(col));
  for (std::size_t t = 1; t < padded_cols; t <<= 1) out = ev.add(out, ev.rot(out, -as_diff(t)));
  return out;
}

Ciphertext broadcast_row(he::Evaluator& ev, const Ciphertext& ct, std::size_t padded_cols,
                         std::size_t period, std::size_t row, std::size_t col_begin,
                         std::size_t col_end, double scale) {
  const auto mask = enc::make_mask(ev.slots(), padded_cols, [&](std::size_t r, std::size_t c) {
    return (r % period == row && c >= col_begin && c < col_end) ? scale : 0.0;
  });
  Ciphertext out = ev.cmult(ct, mask);
  for (std::size_t t = 1; t < period; t <<= 1) {
    out = ev.add(out, ev.rot(out, as_diff(t * padded_cols)));
  }
  return out;
}

}  // namespace kernels

MatMulPlan plan_matmul(const he::HEParams& params, std::size_t m, std::size_t n, std::size_t p,
                       TransposedSide side, std::size_t max_cols) {
  if (m == 0 || n == 0 || p == 0) throw ShapeMismatch("matrix dimensions must be positive");
  const std::size_t slots = params.slots();
  MatMulPlan plan{m, n, p, 1, 1, 1, side, 1};
  std::size_t inner = n;
  if (max_cols > 0 && n > max_cols) {
    plan.vertical_splits = (n + max_cols - 1) / max_cols;
    inner = max_cols;
  }
  if (side == TransposedSide::second) {
    if (inner > slots) throw MatrixTooWide("inner dimension exceeds the slot count");
    std::size_t pc = enc::next_pow2(inner);
    while (pc < slots) {
      const std::size_t rows = slots / pc;
      const std::size_t block = std::min(p, rows);
      if (inner - 1 + block <= pc && p <= pc) break;
      pc <<= 1;
    }
    plan.padded_cols = pc;
    const std::size_t rows = slots / pc;
    plan.team_a_size = (m + rows - 1) / rows;
    plan.team_b_size = (p + rows - 1) / rows;
  } else {
    const std::size_t width = std::max(m, p);
    if (width > slots) throw MatrixTooWide("operand width exceeds the slot count");
    plan.padded_cols = enc::next_pow2(width);
    const std::size_t rows = slots / plan.padded_cols;
    plan.team_a_size = (n + rows - 1) / rows;
    plan.team_b_size = plan.team_a_size;
  }
  return plan;
}

PackedMatrix dvr_mult(he::Evaluator& ev, const PackedMatrix& team_a, const PackedMatrix& team_bt,
                      const RevolverOptions& opts) {
  check_revolver_operands(team_a, team_bt, opts);
  PackedMatrix out;
  out.shape = {team_a.shape.rows, opts.out_col_offset + team_bt.shape.rows};
  out.padded_cols = team_a.padded_cols;
  out.rows_per_ct = team_a.rows_per_ct;
  out.cts.resize(team_a.team_size());

  const std::size_t inner = team_a.shape.cols;
  for_blocks(team_a.team_size(), opts.exec, [&](std::size_t i) {
    std::optional<Ciphertext> acc;
    for (std::size_t j = 0; j < team_bt.team_size(); ++j) {
      auto part = revolver_block(ev, team_a.cts[i], team_a.rows_in(i), team_bt.cts[j],
                                 team_bt.rows_in(j), team_bt.period(j), inner,
                                 team_a.padded_cols, opts.out_col_offset + j * team_bt.rows_per_ct,
                                 opts.scale);
      acc = accumulate(ev, acc, std::move(part));
    }
    out.cts[i] = std::move(*acc);
  });
  return out;
}

PackedMatrix vr_mult(he::Evaluator& ev, const PackedMatrix& a, const PackedMatrix& bt,
                     const RevolverOptions& opts) {
  if (a.team_size() != 1 || bt.team_size() != 1) {
    throw ShapeMismatch("vr_mult takes single-ciphertext operands; use dvr_mult for teams");
  }
  return dvr_mult(ev, a, bt, opts);
}

std::vector<PackedMatrix> pack_vertical(he::Evaluator& ev, const Matrix& m, std::size_t max_cols,
                                        std::size_t padded_cols, bool replicated) {
  if (max_cols == 0 || (max_cols & (max_cols - 1)) != 0 || max_cols > ev.slots()) {
    throw ShapeMismatch("max_cols must be a power of two no larger than the slot count");
  }
  const auto cols = static_cast<std::size_t>(m.cols());
  const std::size_t chunks = (cols + max_cols - 1) / max_cols;
  const std::size_t width = std::min(cols, max_cols);
  const std::size_t pc = padded_cols == 0 ? enc::next_pow2(width) : padded_cols;
  std::vector<PackedMatrix> out;
  for (std::size_t c = 0; c < chunks; ++c) {
    const std::size_t begin = c * max_cols;
    const std::size_t w = std::min(max_cols, cols - begin);
    const Matrix part = m.middleCols(as_diff(begin), as_diff(w));
    out.push_back(replicated ? enc::pack_replicated(ev, part, pc)
                             : enc::pack_row_major(ev, part, pc));
  }
  return out;
}

PackedMatrix dvr_mult_vertical(he::Evaluator& ev, const std::vector<PackedMatrix>& a_chunks,
                               const std::vector<PackedMatrix>& bt_chunks,
                               const RevolverOptions& opts) {
  if (a_chunks.empty() || a_chunks.size() != bt_chunks.size()) {
    throw ShapeMismatch("vertical partitions of A and Bᵀ disagree");
  }
  PackedMatrix out = dvr_mult(ev, a_chunks[0], bt_chunks[0], opts);
  for (std::size_t c = 1; c < a_chunks.size(); ++c) {
    const PackedMatrix part = dvr_mult(ev, a_chunks[c], bt_chunks[c], opts);
    if (part.padded_cols != out.padded_cols || part.team_size() != out.team_size()) {
      throw ShapeMismatch("vertical chunks must share one layout");
    }
    for (std::size_t q = 0; q < out.team_size(); ++q) out.cts[q] = ev.add(out.cts[q], part.cts[q]);
  }
  return out;
}

PackedMatrix vr_mult_transposed_first(he::Evaluator& ev, const PackedMatrix& at,
                                      const PackedMatrix& b, const TransposedFirstOptions& opts) {
  if (at.shape.rows != b.shape.rows) {
    throw ShapeMismatch("inner dimensions disagree: Aᵀ has " + std::to_string(at.shape.rows) +
                        " rows, B has " + std::to_string(b.shape.rows));
  }
  if (at.padded_cols != b.padded_cols || at.team_size() != b.team_size()) {
    throw ShapeMismatch("Aᵀ and B must share one layout");
  }
  if (at.shape.cols < opts.at_col_offset) throw ShapeMismatch("column offset outside Aᵀ");
  const std::size_t m = at.shape.cols - opts.at_col_offset;
  const std::size_t p = b.shape.cols;
  const std::size_t pc = b.padded_cols;
  const std::size_t rows = b.rows_per_ct;
  if (m == 0) throw ShapeMismatch("Aᵀ has no columns past the offset");

  PackedMatrix out;
  out.shape = {m, p};
  out.padded_cols = pc;
  out.rows_per_ct = rows;
  out.replicated = opts.replicated_out;
  out.is_transposed = opts.replicated_out;
  const std::size_t out_blocks = (m + rows - 1) / rows;

  std::vector<Ciphertext> row_sums(m);
  for_blocks(m, opts.exec, [&](std::size_t i) {
    std::optional<Ciphertext> acc;
    for (std::size_t t = 0; t < at.team_size(); ++t) {
      const auto col = kernels::broadcast_column(ev, at.cts[t], pc, at.rows_in(t),
                                                 opts.at_col_offset + i);
      acc = accumulate(ev, acc, ev.mult(col, b.cts[t]));
    }
    for (std::size_t s = 1; s < rows; s <<= 1) acc = ev.add(*acc, ev.rot(*acc, as_diff(s * pc)));
    row_sums[i] = std::move(*acc);
  });

  out.cts.resize(out_blocks);
  for (std::size_t q = 0; q < out_blocks; ++q) {
    const std::size_t block_rows = out.rows_in(q);
    const std::size_t period = out.period(q);
    std::optional<Ciphertext> acc;
    for (std::size_t r = 0; r < block_rows; ++r) {
      const auto mask = enc::make_mask(ev.slots(), pc, [&](std::size_t row, std::size_t c) {
        const bool hit = opts.replicated_out ? row % period == r : row == r;
        return (hit && c < p) ? opts.scale : 0.0;
      });
      acc = accumulate(ev, acc, ev.cmult(row_sums[q * rows + r], mask));
    }
    out.cts[q] = std::move(*acc);
  }
  return out;
}

PackedMatrix broadcast_mult(he::Evaluator& ev, const PackedMatrix& a, const PackedMatrix& b,
                            const BroadcastOptions& opts) {
  if (!b.replicated) throw ShapeMismatch("broadcast_mult expects B in the replicated layout");
  if (a.padded_cols != b.padded_cols) throw ShapeMismatch("A and B must share a padded width");
  if (a.shape.cols < opts.a_col_offset + b.shape.rows) {
    throw ShapeMismatch("A has " + std::to_string(a.shape.cols) + " columns, need " +
                        std::to_string(opts.a_col_offset + b.shape.rows));
  }
  const std::size_t pc = a.padded_cols;
  const std::size_t col_end = std::min(opts.b_col_end, b.shape.cols);
  const std::size_t inner = b.shape.rows;

  std::vector<Ciphertext> rows_of_b(inner);
  for_blocks(inner, opts.exec, [&](std::size_t j) {
    const std::size_t q = j / b.rows_per_ct;
    rows_of_b[j] = kernels::broadcast_row(ev, b.cts[q], pc, b.period(q), j % b.rows_per_ct,
                                          opts.b_col_begin, col_end, opts.scale);
  });

  PackedMatrix out;
  out.shape = {a.shape.rows, col_end};
  out.padded_cols = pc;
  out.rows_per_ct = a.rows_per_ct;
  out.cts.resize(a.team_size());
  for_blocks(a.team_size(), opts.exec, [&](std::size_t t) {
    std::optional<Ciphertext> acc;
    for (std::size_t j = 0; j < inner; ++j) {
      const auto col = kernels::broadcast_column(ev, a.cts[t], pc, a.rows_in(t), opts.a_col_offset + j);
      acc = accumulate(ev, acc, ev.mult(col, rows_of_b[j]));
    }
    out.cts[t] = std::move(*acc);
  });
  return out;
}

}  // namespace revolver::mm
