#pragma once

// Sparse binary-classification datasets: LIBSVM text and IDX (MNIST-style)
// readers, cached row norms, and a LIBSVM writer for round-tripping.

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <istream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace nsopt {

template <typename Scalar>
using DenseVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// n samples with d features; labels are +1/-1. Feature rows are stored
// compressed with strictly increasing column indices (0-based internally;
// LIBSVM text is 1-based).
template <typename Scalar = double>
struct SparseDataset {
  using SpMat = Eigen::SparseMatrix<Scalar, Eigen::RowMajor>;
  using Vector = DenseVector<Scalar>;

  SpMat features;
  Vector labels;
  Vector row_sq_norms;  // cached ||x^j||^2

  Eigen::Index n() const { return features.rows(); }
  Eigen::Index dim() const { return features.cols(); }
};

// Assembles a dataset from per-row (column, value) lists, enforcing the
// strictly-increasing index invariant and caching row norms.
template <typename Scalar>
SparseDataset<Scalar> make_dataset(
    Eigen::Index d,
    const std::vector<std::vector<std::pair<Eigen::Index, Scalar>>>& rows,
    const std::vector<Scalar>& labels) {
  if (rows.size() != labels.size())
    throw std::invalid_argument("make_dataset: rows/labels size mismatch");
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  SparseDataset<Scalar> ds;
  ds.features.resize(n, d);
  ds.labels.resize(n);
  ds.row_sq_norms.resize(n);
  std::vector<Eigen::Triplet<Scalar>> trips;
  for (Eigen::Index j = 0; j < n; ++j) {
    Eigen::Index prev = -1;
    Scalar sq = 0;
    for (const auto& [col, val] : rows[static_cast<std::size_t>(j)]) {
      if (col <= prev)
        throw std::invalid_argument("make_dataset: indices not strictly increasing");
      if (col < 0 || col >= d) throw std::invalid_argument("make_dataset: index out of range");
      prev = col;
      trips.emplace_back(static_cast<int>(j), static_cast<int>(col), val);
      sq += val * val;
    }
    if (!(labels[static_cast<std::size_t>(j)] == Scalar(1) ||
          labels[static_cast<std::size_t>(j)] == Scalar(-1)))
      throw std::invalid_argument("make_dataset: labels must be +1 or -1");
    ds.labels[j] = labels[static_cast<std::size_t>(j)];
    ds.row_sq_norms[j] = sq;
  }
  ds.features.setFromTriplets(trips.begin(), trips.end());
  ds.features.makeCompressed();
  return ds;
}

namespace detail {

inline bool parse_number(const std::string& tok, double& out) {
  const char* s = tok.c_str();
  char* end = nullptr;
  out = std::strtod(s, &end);
  return end != s && *end == '\0';
}

inline bool parse_index(const std::string& tok, long long& out) {
  const char* s = tok.c_str();
  char* end = nullptr;
  out = std::strtoll(s, &end, 10);
  return end != s && *end == '\0';
}

}  // namespace detail

// Reads LIBSVM text ("label idx:val idx:val ..."), one sample per line.
// Indices are 1-based in the file and must be strictly increasing within a
// row.  d defaults to the largest index seen; a dim override must cover every
// index.  label_map turns the raw numeric label into +1/-1 (default:
// label > 0 -> +1, else -1).  Blank lines are skipped; an input with no
// samples is an error.
template <typename Scalar = double>
SparseDataset<Scalar> parse_libsvm(std::istream& in,
                                   std::optional<Eigen::Index> dim_override = {},
                                   Scalar (*label_map)(double) = nullptr) {
  std::vector<std::vector<std::pair<Eigen::Index, Scalar>>> rows;
  std::vector<Scalar> labels;
  Eigen::Index max_index = 0;  // largest 1-based index seen
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::vector<std::string> toks;
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
      std::size_t start = i;
      while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
      if (i > start) toks.push_back(line.substr(start, i - start));
    }
    if (toks.empty()) continue;
    double raw_label = 0;
    if (!detail::parse_number(toks[0], raw_label))
      throw ParseError(line_no, "bad label '" + toks[0] + "'");
    labels.push_back(label_map ? label_map(raw_label)
                               : (raw_label > 0 ? Scalar(1) : Scalar(-1)));
    std::vector<std::pair<Eigen::Index, Scalar>> row;
    long long prev = 0;
    for (std::size_t t = 1; t < toks.size(); ++t) {
      const std::string& tok = toks[t];
      const std::size_t colon = tok.find(':');
      if (colon == std::string::npos)
        throw ParseError(line_no, "expected idx:val, got '" + tok + "'");
      long long idx = 0;
      double val = 0;
      if (!detail::parse_index(tok.substr(0, colon), idx) || idx < 1)
        throw ParseError(line_no, "bad feature index in '" + tok + "'");
      if (!detail::parse_number(tok.substr(colon + 1), val))
        throw ParseError(line_no, "bad feature value in '" + tok + "'");
      if (idx <= prev)
        throw ParseError(line_no, "feature indices must be strictly increasing");
      if (dim_override && idx > *dim_override)
        throw ParseError(line_no, "feature index " + std::to_string(idx) +
                                      " exceeds declared dimension " +
                                      std::to_string(*dim_override));
      prev = idx;
      row.emplace_back(static_cast<Eigen::Index>(idx - 1), static_cast<Scalar>(val));
      max_index = std::max(max_index, static_cast<Eigen::Index>(idx));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(line_no, "no samples in input");
  const Eigen::Index d = dim_override ? *dim_override : max_index;
  if (d < 1) throw ParseError(line_no, "cannot infer dimension (no features seen)");
  return make_dataset<Scalar>(d, rows, labels);
}

namespace detail {

inline std::uint32_t read_be32(std::istream& in, const char* what) {
  unsigned char buf[4];
  if (!in.read(reinterpret_cast<char*>(buf), 4))
    throw FormatError(std::string("idx: truncated ") + what);
  return (std::uint32_t(buf[0]) << 24) | (std::uint32_t(buf[1]) << 16) |
         (std::uint32_t(buf[2]) << 8) | std::uint32_t(buf[3]);
}

}  // namespace detail

// Reads an IDX image file (magic 0x00000803) plus its label file (magic
// 0x00000801).  Pixels are scaled to [0, 1] by 1/255 and zeros are dropped;
// d = rows * cols.  Digits equal to positive_class map to +1, the rest to -1.
template <typename Scalar = double>
SparseDataset<Scalar> parse_mnist_idx(std::istream& images, std::istream& labels,
                                      int positive_class) {
  const std::uint32_t img_magic = detail::read_be32(images, "image magic");
  if (img_magic != 0x00000803u)
    throw FormatError("idx: bad image magic " + std::to_string(img_magic));
  const std::uint32_t lab_magic = detail::read_be32(labels, "label magic");
  if (lab_magic != 0x00000801u)
    throw FormatError("idx: bad label magic " + std::to_string(lab_magic));
  const std::uint32_t n_img = detail::read_be32(images, "image count");
  const std::uint32_t n_lab = detail::read_be32(labels, "label count");
  if (n_img != n_lab) throw FormatError("idx: image/label count mismatch");
  if (n_img == 0) throw FormatError("idx: empty image file");
  const std::uint32_t img_rows = detail::read_be32(images, "row count");
  const std::uint32_t img_cols = detail::read_be32(images, "column count");
  const Eigen::Index d = static_cast<Eigen::Index>(img_rows) * img_cols;
  if (d < 1) throw FormatError("idx: zero-sized images");

  std::vector<std::vector<std::pair<Eigen::Index, Scalar>>> rows(n_img);
  std::vector<Scalar> labs(n_img);
  std::vector<unsigned char> pix(static_cast<std::size_t>(d));
  for (std::uint32_t j = 0; j < n_img; ++j) {
    if (!images.read(reinterpret_cast<char*>(pix.data()), d))
      throw FormatError("idx: truncated image data");
    for (Eigen::Index i = 0; i < d; ++i)
      if (pix[static_cast<std::size_t>(i)] != 0)
        rows[j].emplace_back(i, Scalar(pix[static_cast<std::size_t>(i)]) / Scalar(255));
    unsigned char lab = 0;
    if (!labels.read(reinterpret_cast<char*>(&lab), 1))
      throw FormatError("idx: truncated label data");
    labs[j] = (int(lab) == positive_class) ? Scalar(1) : Scalar(-1);
  }
  return make_dataset<Scalar>(d, rows, labs);
}

// Writes LIBSVM text (1-based indices, max-precision values) that parses back
// to the identical dataset.
template <typename Scalar>
void write_libsvm(std::ostream& out, const SparseDataset<Scalar>& ds) {
  char buf[64];
  for (Eigen::Index j = 0; j < ds.n(); ++j) {
    out << (ds.labels[j] > 0 ? "+1" : "-1");
    for (typename SparseDataset<Scalar>::SpMat::InnerIterator it(ds.features, j); it; ++it) {
      std::snprintf(buf, sizeof(buf), "%.17g", static_cast<double>(it.value()));
      out << ' ' << (it.index() + 1) << ':' << buf;
    }
    out << '\n';
  }
}

template <typename Scalar>
Scalar max_row_sq_norm(const SparseDataset<Scalar>& ds) {
  if (ds.n() == 0) throw std::invalid_argument("max_row_sq_norm: empty dataset");
  return ds.row_sq_norms.maxCoeff();
}

template <typename Scalar>
Scalar mean_row_sq_norm(const SparseDataset<Scalar>& ds) {
  if (ds.n() == 0) throw std::invalid_argument("mean_row_sq_norm: empty dataset");
  return ds.row_sq_norms.sum() / Scalar(ds.n());
}

}  // namespace nsopt
