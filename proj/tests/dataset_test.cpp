#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "nsopt/dataset.hpp"
#include "nsopt/reference.hpp"

#include <cstdint>
#include <sstream>
#include <string>

using nsopt::DenseVector;
using nsopt::SparseDataset;

namespace {

// Big-endian byte builder for IDX streams.
void push_be32(std::string& s, std::uint32_t v) {
  s.push_back(char((v >> 24) & 0xff));
  s.push_back(char((v >> 16) & 0xff));
  s.push_back(char((v >> 8) & 0xff));
  s.push_back(char(v & 0xff));
}

std::string idx_images(std::uint32_t count, std::uint32_t rows, std::uint32_t cols,
                       const std::string& pixels, std::uint32_t magic = 0x803) {
  std::string s;
  push_be32(s, magic);
  push_be32(s, count);
  push_be32(s, rows);
  push_be32(s, cols);
  s += pixels;
  return s;
}

std::string idx_labels(std::uint32_t count, const std::string& digits,
                       std::uint32_t magic = 0x801) {
  std::string s;
  push_be32(s, magic);
  push_be32(s, count);
  s += digits;
  return s;
}

}  // namespace

TEST_CASE("parses libsvm lines with 1-based indices") {
  std::istringstream in("-1 3:1 10:0.5\n+1 1:2\n");
  const SparseDataset<double> ds = nsopt::parse_libsvm<double>(in);
  CHECK(ds.n() == 2);
  CHECK(ds.dim() == 10);
  CHECK(ds.labels[0] == -1.0);
  CHECK(ds.labels[1] == 1.0);
  CHECK(ds.features.coeff(0, 2) == 1.0);
  CHECK(ds.features.coeff(0, 9) == 0.5);
  CHECK(ds.features.coeff(1, 0) == 2.0);
  CHECK(ds.features.row(0).nonZeros() == 2);
  CHECK(ds.features.row(1).nonZeros() == 1);
  CHECK(ds.row_sq_norms[0] == doctest::Approx(1.25).epsilon(1e-15));
  CHECK(ds.row_sq_norms[1] == doctest::Approx(4.0).epsilon(1e-15));
}

TEST_CASE("feature-free line becomes an all-zero row") {
  std::istringstream in("+1 2:1.5\n-1\n");
  const SparseDataset<double> ds = nsopt::parse_libsvm<double>(in);
  CHECK(ds.n() == 2);
  CHECK(ds.dim() == 2);
  CHECK(ds.features.row(1).nonZeros() == 0);
  CHECK(ds.row_sq_norms[1] == 0.0);
  CHECK(ds.labels[1] == -1.0);
}

TEST_CASE("blank lines are skipped") {
  std::istringstream in("\n+1 1:1\n\n-1 1:2\n\n");
  const SparseDataset<double> ds = nsopt::parse_libsvm<double>(in);
  CHECK(ds.n() == 2);
}

TEST_CASE("dimension override pads and polices indices") {
  {
    std::istringstream in("+1 3:1\n");
    const SparseDataset<double> ds = nsopt::parse_libsvm<double>(in, 123);
    CHECK(ds.dim() == 123);
  }
  {
    std::istringstream in("+1 130:1\n");
    CHECK_THROWS_AS(nsopt::parse_libsvm<double>(in, 123), nsopt::ParseError);
  }
}

TEST_CASE("malformed input is rejected with a line number") {
  const auto expect_error_on_line = [](const std::string& text, std::size_t line) {
    std::istringstream in(text);
    try {
      nsopt::parse_libsvm<double>(in);
      FAIL_CHECK("expected ParseError for: " << text);
    } catch (const nsopt::ParseError& e) {
      CHECK(e.line() == line);
    }
  };
  expect_error_on_line("abc 1:2\n", 1);
  expect_error_on_line("+1 12\n", 1);
  expect_error_on_line("+1 x:2\n", 1);
  expect_error_on_line("+1 2:zz\n", 1);
  expect_error_on_line("+1 0:1\n", 1);
  expect_error_on_line("+1 -3:1\n", 1);
  expect_error_on_line("+1 1:1\n+1 2:1 2:3\n", 2);
  expect_error_on_line("+1 1:1\n+1 3:1 2:1\n", 2);
  expect_error_on_line("", 0);
  expect_error_on_line("\n\n", 2);
}

TEST_CASE("label mapping defaults to sign and accepts a custom map") {
  {
    std::istringstream in("0 1:1\n2 1:1\n-3 1:1\n");
    const SparseDataset<double> ds = nsopt::parse_libsvm<double>(in);
    CHECK(ds.labels[0] == -1.0);
    CHECK(ds.labels[1] == 1.0);
    CHECK(ds.labels[2] == -1.0);
  }
  {
    std::istringstream in("3 1:1\n1 1:1\n");
    const auto map_three = +[](double raw) { return raw == 3.0 ? 1.0 : -1.0; };
    const SparseDataset<double> ds = nsopt::parse_libsvm<double>(in, {}, map_three);
    CHECK(ds.labels[0] == 1.0);
    CHECK(ds.labels[1] == -1.0);
  }
}

TEST_CASE("libsvm round trip is exact") {
  const SparseDataset<double> ds = nsopt::synthetic_dense_instance<double>(20, 7, 99);
  std::ostringstream out;
  nsopt::write_libsvm(out, ds);
  std::istringstream in(out.str());
  const SparseDataset<double> back = nsopt::parse_libsvm<double>(in, ds.dim());
  REQUIRE(back.n() == ds.n());
  REQUIRE(back.dim() == ds.dim());
  for (Eigen::Index j = 0; j < ds.n(); ++j) {
    CHECK(back.labels[j] == ds.labels[j]);
    CHECK(back.row_sq_norms[j] == ds.row_sq_norms[j]);
    SparseDataset<double>::SpMat::InnerIterator a(ds.features, j);
    SparseDataset<double>::SpMat::InnerIterator b(back.features, j);
    for (; a && b; ++a, ++b) {
      CHECK(a.index() == b.index());
      CHECK(a.value() == b.value());
    }
    CHECK(!a);
    CHECK(!b);
  }
}

TEST_CASE("idx image/label pair parses with scaling and one-vs-rest labels") {
  const std::string pixels = {char(0), char(128), char(255), char(64),
                              char(0), char(0),   char(0),   char(0)};
  const std::string digits = {char(1), char(7)};
  std::istringstream images(idx_images(2, 2, 2, pixels));
  std::istringstream labels(idx_labels(2, digits));
  const SparseDataset<double> ds = nsopt::parse_mnist_idx<double>(images, labels, 1);
  CHECK(ds.n() == 2);
  CHECK(ds.dim() == 4);
  CHECK(ds.labels[0] == 1.0);
  CHECK(ds.labels[1] == -1.0);
  CHECK(ds.features.coeff(0, 0) == 0.0);
  CHECK(ds.features.coeff(0, 1) == 128.0 / 255.0);
  CHECK(ds.features.coeff(0, 2) == 1.0);
  CHECK(ds.features.coeff(0, 3) == 64.0 / 255.0);
  CHECK(ds.features.row(0).nonZeros() == 3);  // zero pixel dropped
  CHECK(ds.features.row(1).nonZeros() == 0);  // all-zero image
}

TEST_CASE("idx rejects corrupt streams") {
  const std::string pixels(8, char(1));
  const std::string digits = {char(0), char(1)};
  {
    std::istringstream images(idx_images(2, 2, 2, pixels, 0x802));
    std::istringstream labels(idx_labels(2, digits));
    CHECK_THROWS_AS(nsopt::parse_mnist_idx<double>(images, labels, 1),
                    nsopt::FormatError);
  }
  {
    std::istringstream images(idx_images(2, 2, 2, pixels));
    std::istringstream labels(idx_labels(2, digits, 0x803));
    CHECK_THROWS_AS(nsopt::parse_mnist_idx<double>(images, labels, 1),
                    nsopt::FormatError);
  }
  {
    std::istringstream images(idx_images(2, 2, 2, pixels));
    std::istringstream labels(idx_labels(3, digits + std::string(1, char(2))));
    CHECK_THROWS_AS(nsopt::parse_mnist_idx<double>(images, labels, 1),
                    nsopt::FormatError);
  }
  {
    std::istringstream images(idx_images(2, 2, 2, pixels.substr(0, 5)));
    std::istringstream labels(idx_labels(2, digits));
    CHECK_THROWS_AS(nsopt::parse_mnist_idx<double>(images, labels, 1),
                    nsopt::FormatError);
  }
  {
    std::istringstream images(idx_images(2, 2, 2, pixels));
    std::istringstream labels(idx_labels(2, digits.substr(0, 1)));
    CHECK_THROWS_AS(nsopt::parse_mnist_idx<double>(images, labels, 1),
                    nsopt::FormatError);
  }
  {
    std::istringstream images(idx_images(0, 2, 2, ""));
    std::istringstream labels(idx_labels(0, ""));
    CHECK_THROWS_AS(nsopt::parse_mnist_idx<double>(images, labels, 1),
                    nsopt::FormatError);
  }
}

TEST_CASE("norm helpers match hand arithmetic") {
  // rows (1,1) and (2,0): squared norms 2 and 4
  const SparseDataset<double> ds = nsopt::make_dataset<double>(
      2, {{{0, 1.0}, {1, 1.0}}, {{0, 2.0}}}, {1.0, -1.0});
  CHECK(nsopt::max_row_sq_norm(ds) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(nsopt::mean_row_sq_norm(ds) == doctest::Approx(3.0).epsilon(1e-15));

  const SparseDataset<double> one = nsopt::make_dataset<double>(
      2, {{{0, 3.0}, {1, 4.0}}}, {1.0});
  CHECK(nsopt::max_row_sq_norm(one) == doctest::Approx(25.0).epsilon(1e-15));
  CHECK(nsopt::mean_row_sq_norm(one) == doctest::Approx(25.0).epsilon(1e-15));

  const SparseDataset<double> empty;
  CHECK_THROWS_AS(nsopt::max_row_sq_norm(empty), std::invalid_argument);
  CHECK_THROWS_AS(nsopt::mean_row_sq_norm(empty), std::invalid_argument);
}

TEST_CASE("make_dataset enforces its invariants") {
  using Rows = std::vector<std::vector<std::pair<Eigen::Index, double>>>;
  CHECK_THROWS_AS(nsopt::make_dataset<double>(2, Rows{{{0, 1.0}, {0, 2.0}}}, {1.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(nsopt::make_dataset<double>(2, Rows{{{1, 1.0}, {0, 2.0}}}, {1.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(nsopt::make_dataset<double>(2, Rows{{{2, 1.0}}}, {1.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(nsopt::make_dataset<double>(2, Rows{{{0, 1.0}}}, {0.5}),
                  std::invalid_argument);
  CHECK_THROWS_AS(nsopt::make_dataset<double>(2, Rows{{{0, 1.0}}}, {1.0, -1.0}),
                  std::invalid_argument);
}

TEST_CASE("cached row norms match dense recomputation") {
  const SparseDataset<double> ds = nsopt::synthetic_dense_instance<double>(40, 9, 31);
  for (Eigen::Index j = 0; j < ds.n(); ++j) {
    double sq = 0;
    for (SparseDataset<double>::SpMat::InnerIterator it(ds.features, j); it; ++it)
      sq += it.value() * it.value();
    CHECK(ds.row_sq_norms[j] ==
          doctest::Approx(sq).epsilon(1e-12));
  }
}
