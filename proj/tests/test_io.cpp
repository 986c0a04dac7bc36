#include <catch2/catch_amalgamated.hpp>

#include <bit>
#include <cmath>
#include <limits>
#include <sstream>

#include "hmx/generators.hpp"
#include "hmx/hmatrix.hpp"
#include "hmx/nn.hpp"
#include "hmx/serialize.hpp"
#include "hmx/svd.hpp"
#include "helpers.hpp"

using namespace hmx;

namespace {

std::string matrix_text(const DenseMatrix& a) {
  std::ostringstream os;
  write_matrix(os, a);
  return os.str();
}

DenseMatrix text_round_trip(const DenseMatrix& a) {
  std::istringstream is(matrix_text(a));
  return read_matrix(is);
}

bool bit_equal(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows != b.rows || a.cols != b.cols) return false;
  for (std::size_t i = 0; i < a.entries.size(); ++i)
    if (std::bit_cast<std::uint64_t>(a.entries[i]) !=
        std::bit_cast<std::uint64_t>(b.entries[i]))
      return false;
  return true;
}

} // namespace

TEST_CASE("matrix text format round trips") {
  SECTION("1x1") {
    DenseMatrix a(1, 1);
    a.at(0, 0) = 42.0;
    REQUIRE(bit_equal(text_round_trip(a), a));
  }
  SECTION("negative zero and denormals survive") {
    DenseMatrix a(2, 2);
    a.at(0, 0) = -0.0;
    a.at(0, 1) = std::numeric_limits<double>::denorm_min();
    a.at(1, 0) = -std::numeric_limits<double>::denorm_min() * 7;
    a.at(1, 1) = 0.1 + 0.2;
    const DenseMatrix b = text_round_trip(a);
    REQUIRE(bit_equal(b, a));
    REQUIRE(std::signbit(b.at(0, 0)));
  }
  SECTION("seeded 64x64 is byte-stable") {
    const DenseMatrix a = testutil::random_matrix(64, 64, 77);
    const DenseMatrix b = text_round_trip(a);
    REQUIRE(bit_equal(b, a));
    REQUIRE(matrix_text(a) == matrix_text(b));
  }
  SECTION("bad header is rejected") {
    std::istringstream is("not a matrix");
    REQUIRE_THROWS_AS(read_matrix(is), std::runtime_error);
  }
}

TEST_CASE("HMX1 round trips bit-exactly for 20 seeded builds") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const MatrixKind kind = static_cast<MatrixKind>(seed % 4);
    GeneratorParams p;
    p.condition = 1e3;
    p.rank = 3;
    const std::size_t n = 32 + 16 * (seed % 3);
    const DenseMatrix a = generate_matrix(kind, n, p, seed);
    BuildConfig cfg;
    cfg.epsilon_tol = (seed % 2) ? 1e-3 : 1e-6;
    const HMatrix h = build_adaptive(a, cfg);

    const std::string bytes = hmx1_bytes(h);
    std::istringstream is(bytes, std::ios::binary);
    const HMatrix g = read_hmx1(is);
    REQUIRE(hmx1_bytes(g) == bytes);
    REQUIRE(g.rows == h.rows);
    REQUIRE(g.cols == h.cols);
    REQUIRE(g.tol == h.tol);
    REQUIRE(g.n_r == h.n_r);
    REQUIRE(g.stored_scalars == h.stored_scalars);
    REQUIRE(g.depth == h.depth);
    REQUIRE(bit_equal(reconstruct(g), reconstruct(h)));
  }
}

TEST_CASE("HMX1 rejects bad magic") {
  std::istringstream is("NOPE", std::ios::binary);
  REQUIRE_THROWS_AS(read_hmx1(is), std::runtime_error);
}

TEST_CASE("HMXN round trips bit-exactly for 20 seeded networks") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Network net = init_network({2, 24, 24, 1}, seed);
    if (seed % 2) {
      net = compress_network(net, 1e-2).net; // embed H-matrix layers
    }
    const std::string bytes = hmxn_bytes(net);
    std::istringstream is(bytes, std::ios::binary);
    const Network loaded = read_hmxn(is);
    REQUIRE(hmxn_bytes(loaded) == bytes);
    REQUIRE(loaded.layers.size() == net.layers.size());
    const auto x = testutil::random_vector(2, seed + 500);
    const auto y0 = forward(net, x);
    const auto y1 = forward(loaded, x);
    REQUIRE(std::bit_cast<std::uint64_t>(y0[0]) ==
            std::bit_cast<std::uint64_t>(y1[0]));
  }
}

TEST_CASE("generator families have their stated structure") {
  SECTION("rank_k with k=1 has exactly one significant singular value") {
    GeneratorParams p;
    p.rank = 1;
    const DenseMatrix a = generate_matrix(MatrixKind::rank_k, 48, p, 4);
    const auto sv = svd(a).singular_values;
    REQUIRE(sv.front() > 1e-6);
    for (std::size_t i = 1; i < sv.size(); ++i) REQUIRE(sv[i] <= 1e-12);
  }
  SECTION("geometric spectrum hits the requested condition number") {
    GeneratorParams p;
    p.condition = 1e6;
    const DenseMatrix a =
        generate_matrix(MatrixKind::geometric_spectrum, 64, p, 4);
    const SpectrumReport r = spectrum(a);
    REQUIRE(r.condition_number >= 0.99e6);
    REQUIRE(r.condition_number <= 1.01e6);
  }
  SECTION("same seed reproduces bit-identical matrices") {
    for (MatrixKind kind :
         {MatrixKind::kernel_band, MatrixKind::geometric_spectrum,
          MatrixKind::rank_k, MatrixKind::random_dense}) {
      const DenseMatrix a = generate_matrix(kind, 32, {}, 9);
      const DenseMatrix b = generate_matrix(kind, 32, {}, 9);
      REQUIRE(bit_equal(a, b));
    }
  }
  SECTION("different seeds differ") {
    const DenseMatrix a =
        generate_matrix(MatrixKind::random_dense, 16, {}, 1);
    const DenseMatrix b =
        generate_matrix(MatrixKind::random_dense, 16, {}, 2);
    REQUIRE(!bit_equal(a, b));
  }
}
