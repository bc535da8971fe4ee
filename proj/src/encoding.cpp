#include "revolver/encoding.hpp"

#include <algorithm>
#include <bit>
#include <string>

namespace revolver::enc {

namespace {

std::ptrdiff_t as_diff(std::size_t v) { return static_cast<std::ptrdiff_t>(v); }

std::size_t wrap(std::ptrdiff_t k, std::size_t n) {
  const auto m = as_diff(n);
  return static_cast<std::size_t>(((k % m) + m) % m);
}

std::size_t choose_padded(const he::Evaluator& ev, std::size_t cols, std::size_t padded_cols) {
  if (cols > ev.slots()) {
    throw MatrixTooWide(std::to_string(cols) + " columns do not fit in " +
                        std::to_string(ev.slots()) + " slots");
  }
  if (padded_cols == 0) return next_pow2(cols);
  if (!std::has_single_bit(padded_cols) || padded_cols < cols || padded_cols > ev.slots()) {
    throw ShapeMismatch("padded width " + std::to_string(padded_cols) +
                        " must be a power of two in [cols, slots]");
  }
  return padded_cols;
}

PackedMatrix geometry(const he::Evaluator& ev, const Matrix& m, std::size_t padded_cols) {
  if (m.rows() == 0 || m.cols() == 0) throw ShapeMismatch("cannot pack an empty matrix");
  PackedMatrix pm;
  pm.shape = {static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())};
  pm.padded_cols = choose_padded(ev, pm.shape.cols, padded_cols);
  pm.rows_per_ct = ev.slots() / pm.padded_cols;
  return pm;
}

void require_single(const PackedMatrix& pm, const char* op) {
  if (pm.team_size() != 1) {
    throw ShapeMismatch(std::string(op) + " expects a single-ciphertext matrix, got a team of " +
                        std::to_string(pm.team_size()));
  }
}

}  // namespace

std::size_t next_pow2(std::size_t x) { return x <= 1 ? 1 : std::bit_ceil(x); }

std::size_t PackedMatrix::rows_in(std::size_t q) const {
  const std::size_t start = q * rows_per_ct;
  return start >= shape.rows ? 0 : std::min(rows_per_ct, shape.rows - start);
}

std::size_t PackedMatrix::period(std::size_t q) const {
  return replicated ? next_pow2(rows_in(q)) : rows_per_ct;
}

int PackedMatrix::min_level() const {
  int lvl = cts.empty() ? 0 : cts.front().level;
  for (const auto& ct : cts) lvl = std::min(lvl, ct.level);
  return lvl;
}

std::vector<double> make_mask(std::size_t slots, std::size_t padded_cols,
                              const std::function<double(std::size_t, std::size_t)>& value) {
  std::vector<double> mask(slots, 0.0);
  const std::size_t rows = slots / padded_cols;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < padded_cols; ++c) mask[r * padded_cols + c] = value(r, c);
  }
  return mask;
}

PackedMatrix pack_row_major(he::Evaluator& ev, const Matrix& m, std::size_t padded_cols) {
  PackedMatrix pm = geometry(ev, m, padded_cols);
  const std::size_t teams = (pm.shape.rows + pm.rows_per_ct - 1) / pm.rows_per_ct;
  std::vector<double> buf(ev.slots());
  for (std::size_t q = 0; q < teams; ++q) {
    std::fill(buf.begin(), buf.end(), 0.0);
    const std::size_t base = q * pm.rows_per_ct;
    const std::size_t rows = std::min(pm.rows_per_ct, pm.shape.rows - base);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < pm.shape.cols; ++c) {
        buf[r * pm.padded_cols + c] = m(as_diff(base + r), as_diff(c));
      }
    }
    pm.cts.push_back(ev.enc(buf));
  }
  return pm;
}

PackedMatrix pack_replicated(he::Evaluator& ev, const Matrix& m, std::size_t padded_cols,
                             bool is_transposed) {
  PackedMatrix pm = geometry(ev, m, padded_cols);
  pm.replicated = true;
  pm.is_transposed = is_transposed;
  const std::size_t teams = (pm.shape.rows + pm.rows_per_ct - 1) / pm.rows_per_ct;
  std::vector<double> buf(ev.slots());
  for (std::size_t q = 0; q < teams; ++q) {
    std::fill(buf.begin(), buf.end(), 0.0);
    const std::size_t base = q * pm.rows_per_ct;
    const std::size_t rows = std::min(pm.rows_per_ct, pm.shape.rows - base);
    const std::size_t period = next_pow2(rows);
    for (std::size_t t = 0; t < pm.rows_per_ct; ++t) {
      const std::size_t r = t % period;
      if (r >= rows) continue;
      for (std::size_t c = 0; c < pm.shape.cols; ++c) {
        buf[t * pm.padded_cols + c] = m(as_diff(base + r), as_diff(c));
      }
    }
    pm.cts.push_back(ev.enc(buf));
  }
  return pm;
}

Matrix unpack(const he::Evaluator& ev, const PackedMatrix& pm) {
  Matrix m(as_diff(pm.shape.rows), as_diff(pm.shape.cols));
  for (std::size_t q = 0; q < pm.team_size(); ++q) {
    const auto slots = ev.dec(pm.cts[q]);
    const std::size_t base = q * pm.rows_per_ct;
    for (std::size_t r = 0; r < pm.rows_in(q); ++r) {
      for (std::size_t c = 0; c < pm.shape.cols; ++c) {
        m(as_diff(base + r), as_diff(c)) = slots[r * pm.padded_cols + c];
      }
    }
  }
  return m;
}

PackedMatrix row_shift_complete(he::Evaluator& ev, const PackedMatrix& pm, std::ptrdiff_t k) {
  require_single(pm, "row_shift_complete");
  const std::size_t rows = pm.shape.rows;
  const std::size_t s = wrap(k, rows);
  if (s == 0) return pm;
  PackedMatrix out = pm;
  const auto& ct = pm.cts[0];
  if (rows == pm.rows_per_ct) {
    out.cts[0] = ev.rot(ct, as_diff(s * pm.padded_cols));
    return out;
  }
  // Rows [0, rows - s) come from below, rows [rows - s, rows) wrap from the top.
  const auto head = make_mask(ev.slots(), pm.padded_cols, [&](std::size_t r, std::size_t c) {
    return (r < rows - s && c < pm.shape.cols) ? 1.0 : 0.0;
  });
  const auto tail = make_mask(ev.slots(), pm.padded_cols, [&](std::size_t r, std::size_t c) {
    return (r >= rows - s && r < rows && c < pm.shape.cols) ? 1.0 : 0.0;
  });
  const auto up = ev.cmult(ev.rot(ct, as_diff(s * pm.padded_cols)), head);
  const auto wrapped = ev.cmult(ev.rot(ct, as_diff(s * pm.padded_cols) - as_diff(rows * pm.padded_cols)), tail);
  out.cts[0] = ev.add(up, wrapped);
  out.replicated = false;
  return out;
}

PackedMatrix col_shift_incomplete(he::Evaluator& ev, const PackedMatrix& pm, std::ptrdiff_t k) {
  PackedMatrix out = pm;
  if (k == 0) return out;
  for (auto& ct : out.cts) ct = ev.rot(ct, k);
  return out;
}

PackedMatrix col_shift_complete(he::Evaluator& ev, const PackedMatrix& pm, std::ptrdiff_t k) {
  const std::size_t cols = pm.shape.cols;
  const std::size_t s = wrap(k, cols);
  PackedMatrix out = pm;
  if (s == 0) return out;
  for (std::size_t q = 0; q < pm.team_size(); ++q) {
    const std::size_t rows = pm.rows_in(q);
    const auto left = make_mask(ev.slots(), pm.padded_cols, [&](std::size_t r, std::size_t c) {
      return (r < rows && c < cols - s) ? 1.0 : 0.0;
    });
    const auto right = make_mask(ev.slots(), pm.padded_cols, [&](std::size_t r, std::size_t c) {
      return (r < rows && c >= cols - s && c < cols) ? 1.0 : 0.0;
    });
    const auto a = ev.cmult(ev.rot(pm.cts[q], as_diff(s)), left);
    const auto b = ev.cmult(ev.rot(pm.cts[q], as_diff(s) - as_diff(cols)), right);
    out.cts[q] = ev.add(a, b);
  }
  return out;
}

PackedMatrix sum_row_vec(he::Evaluator& ev, const PackedMatrix& pm) {
  PackedMatrix out = pm;
  out.replicated = false;
  const std::size_t pc = pm.padded_cols;
  for (std::size_t q = 0; q < pm.team_size(); ++q) {
    const std::size_t rows = pm.rows_in(q);
    auto acc = pm.cts[q];
    // Slot (i, 0) now holds the sum over the window [i*pc, (i+1)*pc).
    for (std::size_t t = 1; t < pc; t <<= 1) acc = ev.add(acc, ev.rot(acc, as_diff(t)));
    const auto first = make_mask(ev.slots(), pc, [&](std::size_t r, std::size_t c) {
      return (r < rows && c == 0) ? 1.0 : 0.0;
    });
    acc = ev.cmult(acc, first);
    for (std::size_t t = 1; t < pc; t <<= 1) acc = ev.add(acc, ev.rot(acc, -as_diff(t)));
    out.cts[q] = std::move(acc);
  }
  return out;
}

PackedMatrix sum_col_vec(he::Evaluator& ev, const PackedMatrix& pm) {
  PackedMatrix out = pm;
  out.replicated = false;
  auto acc = pm.cts[0];
  for (std::size_t q = 1; q < pm.team_size(); ++q) acc = ev.add(acc, pm.cts[q]);
  for (std::size_t t = 1; t < pm.rows_per_ct; t <<= 1) {
    acc = ev.add(acc, ev.rot(acc, as_diff(t * pm.padded_cols)));
  }
  for (std::size_t q = 0; q < pm.team_size(); ++q) {
    const std::size_t rows = pm.rows_in(q);
    const auto valid = make_mask(ev.slots(), pm.padded_cols, [&](std::size_t r, std::size_t c) {
      return (r < rows && c < pm.shape.cols) ? 1.0 : 0.0;
    });
    out.cts[q] = ev.cmult(acc, valid);
  }
  return out;
}

PackedMatrix bootstrap(he::Evaluator& ev, const PackedMatrix& pm) {
  PackedMatrix out = pm;
  for (auto& ct : out.cts) ct = ev.bootstrap(ct);
  return out;
}

}  // namespace revolver::enc
