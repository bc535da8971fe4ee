#pragma once

// Dataset files: MNIST IDX, the 8x8 reduction, and the feature CSV.
//
// Feature CSV: first line `bias,f1,...,fK,label`, then one row per sample
// with K+1 decimal values and an integer label. Lines starting with `#`
// are comments.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "revolver/matrix.hpp"

namespace revolver::data {

struct Dataset {
  Matrix X;
  std::vector<int> y;
  /// Column 0 of X is the constant 1.
  bool has_bias = false;

  std::size_t size() const { return y.size(); }
  /// X without the bias column.
  Matrix features() const;
};

constexpr std::uint32_t kIdxImagesMagic = 2051;
constexpr std::uint32_t kIdxLabelsMagic = 2049;

/// Pixels are scaled to [0, 1].
Dataset load_mnist_idx(const std::filesystem::path& images, const std::filesystem::path& labels);

/// Writes images (n x rows*cols bytes, row-major) and labels in IDX form.
void write_mnist_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                     const std::vector<std::uint8_t>& pixels, const std::vector<std::uint8_t>& y,
                     std::uint32_t rows, std::uint32_t cols);

/// 28x28 -> 8x8: zero-pad to 32x32 with a 2-pixel border, then average
/// non-overlapping 4x4 blocks.
Dataset downsample_8x8(const Dataset& ds);

Dataset load_feature_csv(const std::filesystem::path& path);
/// Prepends the bias column when the dataset has none. Values are written
/// with 9 significant digits.
void write_feature_csv(const std::filesystem::path& path, const Dataset& ds,
                       const std::string& comment = {});

/// Deterministic stand-in batch: balanced labels (i mod classes), features
/// uniform in [0, 1) plus 0.5 on every classes-th feature starting at the
/// label. No bias column.
Dataset synthetic_features(std::size_t n, std::size_t d, int classes, std::uint64_t seed);

Matrix one_hot(const std::vector<int>& y, int classes);

}  // namespace revolver::data
