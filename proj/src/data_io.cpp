#include "revolver/data_io.hpp"

#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>

#include "revolver/errors.hpp"

namespace revolver::data {

namespace {

std::vector<unsigned char> read_all(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DataError("cannot open " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t be32(const std::vector<unsigned char>& b, std::size_t off) {
  return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) |
         (std::uint32_t{b[off + 2]} << 8) | std::uint32_t{b[off + 3]};
}

void put_be32(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                              static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(b.data(), 4);
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_double(std::string_view s, std::size_t line) {
  double v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw NonNumeric("line " + std::to_string(line) + ": '" + std::string(s) + "' is not a number");
  }
  return v;
}

int parse_label(std::string_view s, std::size_t line) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw NonNumeric("line " + std::to_string(line) + ": label '" + std::string(s) +
                     "' is not an integer");
  }
  if (v < 0) throw LabelOutOfRange("line " + std::to_string(line) + ": negative label");
  return v;
}

}  // namespace

Matrix Dataset::features() const { return has_bias ? Matrix(X.rightCols(X.cols() - 1)) : X; }

Dataset load_mnist_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
  const auto img = read_all(images);
  const auto lab = read_all(labels);
  if (img.size() < 16) throw TruncatedFile(images.string() + ": header is cut short");
  if (be32(img, 0) != kIdxImagesMagic) {
    throw BadMagic(images.string() + ": magic " + std::to_string(be32(img, 0)) + ", expected 2051");
  }
  if (lab.size() < 8) throw TruncatedFile(labels.string() + ": header is cut short");
  if (be32(lab, 0) != kIdxLabelsMagic) {
    throw BadMagic(labels.string() + ": magic " + std::to_string(be32(lab, 0)) + ", expected 2049");
  }
  const std::size_t n = be32(img, 4), rows = be32(img, 8), cols = be32(img, 12);
  const std::size_t d = rows * cols;
  if (img.size() != 16 + n * d) {
    throw TruncatedFile(images.string() + ": expected " + std::to_string(16 + n * d) +
                        " bytes, found " + std::to_string(img.size()));
  }
  const std::size_t nl = be32(lab, 4);
  if (lab.size() != 8 + nl) {
    throw TruncatedFile(labels.string() + ": expected " + std::to_string(8 + nl) +
                        " bytes, found " + std::to_string(lab.size()));
  }
  if (nl != n) {
    throw CountMismatch(std::to_string(n) + " images but " + std::to_string(nl) + " labels");
  }
  Dataset ds;
  ds.X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  ds.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      ds.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = img[16 + i * d + j] / 255.0;
    }
    ds.y[i] = lab[8 + i];
  }
  return ds;
}

void write_mnist_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                     const std::vector<std::uint8_t>& pixels, const std::vector<std::uint8_t>& y,
                     std::uint32_t rows, std::uint32_t cols) {
  const std::size_t d = std::size_t{rows} * cols;
  if (d == 0 || pixels.size() != y.size() * d) throw CountMismatch("pixel count does not match labels");
  std::ofstream img(images, std::ios::binary), lab(labels, std::ios::binary);
  if (!img || !lab) throw DataError("cannot write IDX output");
  put_be32(img, kIdxImagesMagic);
  put_be32(img, static_cast<std::uint32_t>(y.size()));
  put_be32(img, rows);
  put_be32(img, cols);
  img.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  put_be32(lab, kIdxLabelsMagic);
  put_be32(lab, static_cast<std::uint32_t>(y.size()));
  lab.write(reinterpret_cast<const char*>(y.data()), static_cast<std::streamsize>(y.size()));
}

Dataset downsample_8x8(const Dataset& ds) {
  if (ds.has_bias || ds.X.cols() != 784) {
    throw ShapeMismatch("downsample_8x8 expects 784 pixel columns, got " + std::to_string(ds.X.cols()));
  }
  Dataset out;
  out.y = ds.y;
  out.X = Matrix::Zero(ds.X.rows(), 64);
  for (Eigen::Index i = 0; i < ds.X.rows(); ++i) {
    for (int r = 0; r < 28; ++r) {
      for (int c = 0; c < 28; ++c) {
        // Padded coordinates are (r + 2, c + 2).
        const int block = ((r + 2) / 4) * 8 + (c + 2) / 4;
        out.X(i, block) += ds.X(i, r * 28 + c);
      }
    }
  }
  out.X /= 16.0;
  return out;
}

Dataset load_feature_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.front() == '#') continue;
    have_header = true;
    break;
  }
  if (!have_header || line.empty()) throw BadHeader(path.string() + ": missing header");
  const auto header = split(line);
  if (header.size() < 3 || header.front() != "bias" || header.back() != "label") {
    throw BadHeader(path.string() + ": header must be bias,f1,...,fK,label");
  }
  for (std::size_t k = 1; k + 1 < header.size(); ++k) {
    if (header[k] != "f" + std::to_string(k)) {
      throw BadHeader(path.string() + ": column " + std::to_string(k + 1) + " should be f" +
                      std::to_string(k));
    }
  }
  const std::size_t width = header.size();
  std::vector<double> values;
  std::vector<int> labels;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line.front() == '#') continue;
    const auto fields = split(line);
    if (fields.size() != width) {
      throw RaggedRow("line " + std::to_string(lineno) + ": " + std::to_string(fields.size()) +
                      " fields, header has " + std::to_string(width));
    }
    for (std::size_t k = 0; k + 1 < width; ++k) values.push_back(parse_double(fields[k], lineno));
    labels.push_back(parse_label(fields.back(), lineno));
  }
  Dataset ds;
  ds.has_bias = true;
  ds.y = std::move(labels);
  const auto d = static_cast<Eigen::Index>(width - 1);
  ds.X = Eigen::Map<const Matrix>(values.data(), static_cast<Eigen::Index>(ds.y.size()), d);
  return ds;
}

void write_feature_csv(const std::filesystem::path& path, const Dataset& ds, const std::string& comment) {
  Matrix full = ds.X;
  if (!ds.has_bias) {
    full.resize(ds.X.rows(), ds.X.cols() + 1);
    full.col(0).setOnes();
    full.rightCols(ds.X.cols()) = ds.X;
  }
  if (static_cast<std::size_t>(full.rows()) != ds.y.size()) throw CountMismatch("rows and labels differ");
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  if (!comment.empty()) out << "# " << comment << '\n';
  out << "bias";
  for (Eigen::Index k = 1; k < full.cols(); ++k) out << ",f" << k;
  out << ",label\n";
  std::array<char, 32> buf{};
  for (Eigen::Index i = 0; i < full.rows(); ++i) {
    for (Eigen::Index k = 0; k < full.cols(); ++k) {
      const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), full(i, k),
                                     std::chars_format::scientific, 8);
      out.write(buf.data(), res.ptr - buf.data());
      out << ',';
    }
    out << ds.y[static_cast<std::size_t>(i)] << '\n';
  }
}

Dataset synthetic_features(std::size_t n, std::size_t d, int classes, std::uint64_t seed) {
  if (classes <= 0) throw LabelOutOfRange("need at least one class");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Dataset ds;
  ds.X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < ds.X.rows(); ++i)
    for (Eigen::Index j = 0; j < ds.X.cols(); ++j) ds.X(i, j) = u(rng);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % static_cast<std::size_t>(classes));
    ds.y.push_back(label);
    for (auto j = static_cast<std::size_t>(label); j < d; j += static_cast<std::size_t>(classes)) {
      ds.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += 0.5;
    }
  }
  return ds;
}

Matrix one_hot(const std::vector<int>& y, int classes) {
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(y.size()), classes);
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] < 0 || y[i] >= classes) {
      throw LabelOutOfRange("label " + std::to_string(y[i]) + " outside [0, " +
                            std::to_string(classes) + ")");
    }
    m(static_cast<Eigen::Index>(i), y[i]) = 1.0;
  }
  return m;
}

}  // namespace revolver::data
