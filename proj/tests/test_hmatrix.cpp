#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "hmx/generators.hpp"
#include "hmx/hmatrix.hpp"
#include "hmx/svd.hpp"
#include "helpers.hpp"

using namespace hmx;

namespace {

DenseMatrix rank_one(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> u(n), v(n);
  for (auto& x : u) x = rng.gaussian();
  for (auto& x : v) x = rng.gaussian();
  DenseMatrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a.at(i, j) = u[i] * v[j];
  return a;
}

// independent traversal oracle: leaf census without the library counters
struct LeafCensus {
  std::size_t low_rank = 0;
  std::size_t dense = 0;
  std::size_t stored = 0;
  std::size_t rank_total = 0;
};

void census_walk(const BlockNode& node, LeafCensus& c) {
  if (node.kind == BlockNode::Kind::branch) {
    for (const auto& ch : node.children) census_walk(*ch, c);
    return;
  }
  const std::size_t m = node.row_span.size();
  const std::size_t n = node.col_span.size();
  if (node.kind == BlockNode::Kind::low_rank) {
    ++c.low_rank;
    c.stored += node.factor.rank() * (m + n);
    c.rank_total += node.factor.rank();
  } else {
    ++c.dense;
    c.stored += m * n;
    c.rank_total += std::min(m, n);
  }
}

} // namespace

TEST_CASE("compress_block outcomes") {
  SECTION("zero block compresses at rank 0") {
    const CompressResult r = compress_block(DenseMatrix(16, 16), 1e-8);
    REQUIRE(r.outcome == CompressOutcome::admitted);
    REQUIRE(r.factor.rank() == 0);
    REQUIRE(r.factor.local_error == 0.0);
  }
  SECTION("full-rank block below its tail tolerance exceeds") {
    const DenseMatrix a = testutil::random_matrix(8, 8, 51);
    const double sigma8 = svd(a).singular_values.back();
    REQUIRE(sigma8 > 0.0);
    const CompressResult r = compress_block(a, 0.5 * sigma8);
    REQUIRE(r.outcome == CompressOutcome::exceeds_tolerance);
  }
  SECTION("rank-1 diagonal admits with storage arithmetic") {
    DenseMatrix a(4, 4);
    a.at(0, 0) = 5.0;
    const CompressResult r = compress_block(a, 0.0);
    REQUIRE(r.outcome == CompressOutcome::admitted);
    REQUIRE(r.factor.rank() == 1); // 1*(4+4) = 8 < 16 scalars
    REQUIRE(r.factor.local_error <= 1e-14);
  }
  SECTION("tolerance met only at a non-saving rank") {
    DenseMatrix a(4, 4);
    a.at(0, 0) = 5.0;
    a.at(1, 1) = 3.0; // exact rank 2, but the saving cap for 4x4 is k=1
    const CompressResult r = compress_block(a, 0.0);
    REQUIRE(r.outcome == CompressOutcome::not_cheaper);
  }
  SECTION("stored local_error tracks direct recomputation") {
    const DenseMatrix a = generate_matrix(MatrixKind::kernel_band, 48, {}, 0);
    const DenseMatrix block = extract_block(a, 0, 24, 24, 24);
    const CompressResult r = compress_block(block, 1e-3);
    REQUIRE(r.outcome == CompressOutcome::admitted);
    const double direct =
        detail::direct_residual(block, r.factor.u, r.factor.v);
    REQUIRE(r.factor.local_error ==
            Catch::Approx(direct).epsilon(1e-8).margin(1e-13));
    REQUIRE(r.factor.local_error <= 1e-3);
  }
}

TEST_CASE("build_adaptive on identity refines the diagonal only") {
  const DenseMatrix a = DenseMatrix::identity(64);
  BuildConfig cfg;
  cfg.epsilon_tol = 1e-6;
  const HMatrix h = build_adaptive(a, cfg);
  REQUIRE(h.root->kind == BlockNode::Kind::branch);
  // root-level off-diagonal quadrants are zero, stored at rank 0
  REQUIRE(h.root->children[1]->kind == BlockNode::Kind::low_rank);
  REQUIRE(h.root->children[1]->factor.rank() == 0);
  REQUIRE(h.root->children[2]->kind == BlockNode::Kind::low_rank);
  REQUIRE(h.root->children[2]->factor.rank() == 0);
  REQUIRE(h.root->children[0]->kind == BlockNode::Kind::branch);
  REQUIRE(measured_error(h, a).global == 0.0);
  REQUIRE(h.n_r == 6);
  REQUIRE(h.depth == 2);
}

TEST_CASE("build_adaptive recovers an exact rank-1 matrix at the root") {
  const DenseMatrix a = rank_one(128, 99);
  BuildConfig cfg;
  cfg.epsilon_tol = 1e-8;
  const HMatrix h = build_adaptive(a, cfg);
  REQUIRE(h.root->kind == BlockNode::Kind::low_rank);
  REQUIRE(h.root->factor.rank() == 1);
  REQUIRE(h.n_r == 1);
  REQUIRE(h.stored_scalars == 256);
  const CompressionReport rep = storage_stats(h, a);
  REQUIRE(rep.compression_ratio == Catch::Approx(256.0 / 16384.0));
  REQUIRE(rep.measured_error <= 1e-8);
  // single-leaf H: global error equals the leaf's recorded local error
  REQUIRE(rep.measured_error ==
          Catch::Approx(h.root->factor.local_error).margin(1e-12));
}

TEST_CASE("kernel matrix build: bound, census and regression fixture") {
  const DenseMatrix a = generate_matrix(MatrixKind::kernel_band, 256, {}, 0);
  BuildConfig cfg;
  cfg.epsilon_tol = 1e-5;
  const HMatrix h = build_adaptive(a, cfg);

  const ErrorDecomposition e = measured_error(h, a);
  REQUIRE(e.global <= 1e-5 * std::sqrt(static_cast<double>(h.n_r)));
  REQUIRE(e.global <= e.leaf_sum);

  LeafCensus c;
  census_walk(*h.root, c);
  REQUIRE(c.low_rank == h.n_r);
  REQUIRE(c.stored == h.stored_scalars);
  REQUIRE(rank_sum(h) == c.rank_total);

  // regression fixture established on first verification
  REQUIRE(h.n_r == 30);
  REQUIRE(h.stored_scalars == 17920);
  REQUIRE(h.depth == 4);
}

TEST_CASE("build_adaptive terminates on dense noise with exact storage") {
  const DenseMatrix a = testutil::random_matrix(64, 64, 7);
  BuildConfig cfg;
  cfg.epsilon_tol = 1e-9;
  const HMatrix h = build_adaptive(a, cfg);
  REQUIRE(measured_error(h, a).global == 0.0);
  REQUIRE(h.n_r == 0);
  REQUIRE(error_bound(h) == 0.0);
  REQUIRE(storage_stats(h).compression_ratio == 1.0);
}

TEST_CASE("build_adaptive input validation") {
  DenseMatrix bad(4, 4);
  bad.at(2, 2) = std::numeric_limits<double>::infinity();
  BuildConfig cfg;
  REQUIRE_THROWS_AS(build_adaptive(bad, cfg), std::invalid_argument);
  cfg.epsilon_tol = 0.0;
  REQUIRE_THROWS_AS(build_adaptive(DenseMatrix::identity(4), cfg),
                    std::invalid_argument);
}

TEST_CASE("hmatvec matches the dense product") {
  SECTION("identity") {
    BuildConfig cfg;
    cfg.epsilon_tol = 1e-6;
    const HMatrix h = build_adaptive(DenseMatrix::identity(32), cfg);
    const auto x = testutil::random_vector(32, 3);
    const auto y = hmatvec(h, x);
    for (std::size_t i = 0; i < 32; ++i)
      REQUIRE(y[i] == Catch::Approx(x[i]).margin(1e-12));
  }
  SECTION("rank-1 root") {
    const DenseMatrix a = rank_one(64, 5);
    BuildConfig cfg;
    cfg.epsilon_tol = 1e-8;
    const HMatrix h = build_adaptive(a, cfg);
    const auto x = testutil::random_vector(64, 6);
    const auto y = hmatvec(h, x);
    const auto yd = matvec_dense(a, x);
    for (std::size_t i = 0; i < 64; ++i)
      REQUIRE(y[i] == Catch::Approx(yd[i]).margin(1e-9));
  }
  SECTION("seeded round trips against the reconstruction oracle") {
    int pairs = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const DenseMatrix a =
          generate_matrix(MatrixKind::kernel_band, 96, {}, seed);
      BuildConfig cfg;
      cfg.epsilon_tol = 1e-4;
      const HMatrix h = build_adaptive(a, cfg);
      const DenseMatrix r = reconstruct(h);
      for (std::uint64_t vs = 0; vs < 20; ++vs) {
        const auto x = testutil::random_vector(96, seed * 100 + vs);
        const auto y = hmatvec(h, x);
        const auto yd = matvec_dense(r, x);
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) {
          num += (y[i] - yd[i]) * (y[i] - yd[i]);
          den += yd[i] * yd[i];
        }
        REQUIRE(std::sqrt(num) <= 1e-9 * std::max(1.0, std::sqrt(den)));
        ++pairs;
      }
    }
    REQUIRE(pairs == 100);
  }
  SECTION("dimension mismatch is rejected") {
    BuildConfig cfg;
    const HMatrix h = build_adaptive(DenseMatrix::identity(8), cfg);
    REQUIRE_THROWS_AS(hmatvec(h, std::vector<double>(7)),
                      std::invalid_argument);
  }
}

TEST_CASE("reconstruct column probe oracle") {
  const DenseMatrix a = generate_matrix(MatrixKind::kernel_band, 64, {}, 0);
  BuildConfig cfg;
  cfg.epsilon_tol = 1e-4;
  const HMatrix h = build_adaptive(a, cfg);
  const DenseMatrix r = reconstruct(h);
  for (std::size_t j = 0; j < 64; ++j) {
    std::vector<double> ej(64, 0.0);
    ej[j] = 1.0;
    const auto col = hmatvec(h, ej);
    for (std::size_t i = 0; i < 64; ++i)
      REQUIRE(col[i] == Catch::Approx(r.at(i, j)).margin(1e-12));
  }
}

TEST_CASE("error_bound is tol times sqrt of the refined-leaf count") {
  const DenseMatrix a = generate_matrix(MatrixKind::kernel_band, 128, {}, 0);
  BuildConfig cfg;
  cfg.epsilon_tol = 1e-3;
  const HMatrix h = build_adaptive(a, cfg);
  REQUIRE(error_bound(h) ==
          Catch::Approx(1e-3 * std::sqrt(static_cast<double>(h.n_r))));
  REQUIRE(measured_error(h, a).global <=
          error_bound(h) + 1e-9 * frobenius_norm(a));
}

TEST_CASE("measured_error of an exact build is zero") {
  GeneratorParams p;
  p.condition = 1e4;
  const DenseMatrix a =
      generate_matrix(MatrixKind::geometric_spectrum, 64, p, 2);
  BuildConfig cfg;
  cfg.epsilon_tol = 1e-8;
  const HMatrix h = build_adaptive(a, cfg);
  REQUIRE(measured_error(h, a).global == 0.0);
}

TEST_CASE("depth_error_profile") {
  SECTION("single leaf gives one level") {
    const DenseMatrix a = rank_one(64, 11);
    BuildConfig cfg;
    cfg.epsilon_tol = 1e-8;
    const HMatrix h = build_adaptive(a, cfg);
    const auto prof = depth_error_profile(h, a);
    REQUIRE(prof.size() == 1);
    REQUIRE(prof[0].first == 0);
  }
  SECTION("exact build gives all-zero maxima") {
    const DenseMatrix a = testutil::random_matrix(48, 48, 13);
    BuildConfig cfg;
    cfg.epsilon_tol = 1e-10;
    const HMatrix h = build_adaptive(a, cfg);
    for (const auto& [level, maxerr] : depth_error_profile(h, a))
      REQUIRE(maxerr == 0.0);
  }
  SECTION("smooth kernel decays across levels (frozen fixture)") {
    const DenseMatrix a =
        generate_matrix(MatrixKind::kernel_band, 512, {}, 0);
    BuildConfig cfg;
    cfg.epsilon_tol = 1e-5;
    cfg.min_block = 8;
    const HMatrix h = build_adaptive(a, cfg);
    const auto prof = depth_error_profile(h, a);
    REQUIRE(prof.size() >= 3);
    double sum = 0.0;
    int count = 0;
    for (std::size_t i = 1; i < prof.size(); ++i) {
      if (prof[i - 1].second > 0.0) {
        sum += prof[i].second / prof[i - 1].second;
        ++count;
      }
    }
    REQUIRE(count > 0);
    REQUIRE(sum / count <= 0.75);
  }
}

TEST_CASE("rebuild_on_perturbed") {
  const DenseMatrix a = generate_matrix(MatrixKind::kernel_band, 128, {}, 0);
  BuildConfig cfg;
  cfg.epsilon_tol = 1e-4;
  const HMatrix h = build_adaptive(a, cfg);
  const double base_err = measured_error(h, a).global;

  SECTION("zero perturbation reproduces the original error") {
    const HMatrix hp = rebuild_on_perturbed(h, a);
    REQUIRE(hp.n_r == h.n_r);
    REQUIRE(measured_error(hp, a).global == Catch::Approx(base_err));
  }
  SECTION("single-entry perturbation keeps the bound") {
    DenseMatrix ap = a;
    const double delta = 0.05;
    ap.at(0, 0) += delta;
    const HMatrix hp = rebuild_on_perturbed(h, ap);
    REQUIRE(measured_error(hp, ap).global <=
            h.tol * std::sqrt(static_cast<double>(hp.n_r)) + delta);
  }
  SECTION("seeded perturbations keep the bound at three delta levels") {
    for (double frac : {1e-6, 1e-3, 1e-1}) {
      const double delta = frac * frobenius_norm(a);
      for (int seed = 0; seed < 20; ++seed) {
        DenseMatrix da(128, 128);
        Rng rng(mix_seed(seed, 0xde17aULL));
        for (double& x : da.entries) x = rng.gaussian();
        const double nf = frobenius_norm(da);
        for (double& x : da.entries) x *= delta / nf;
        const DenseMatrix ap = add(a, da);
        const HMatrix hp = rebuild_on_perturbed(h, ap);
        REQUIRE(measured_error(hp, ap).global <=
                h.tol * std::sqrt(static_cast<double>(hp.n_r)) + delta);
      }
    }
  }
  SECTION("dimension mismatch is rejected") {
    REQUIRE_THROWS_AS(rebuild_on_perturbed(h, DenseMatrix(64, 64)),
                      std::invalid_argument);
  }
}

TEST_CASE("rank_sum on known structures") {
  {
    const DenseMatrix a = rank_one(64, 21);
    BuildConfig cfg;
    cfg.epsilon_tol = 1e-8;
    REQUIRE(rank_sum(build_adaptive(a, cfg)) == 1);
  }
  {
    BuildConfig cfg;
    cfg.epsilon_tol = 1e-6;
    const HMatrix h = build_adaptive(DenseMatrix::identity(64), cfg);
    // rank-0 off-diagonal leaves plus four dense 16x16 diagonal leaves
    REQUIRE(rank_sum(h) == 64);
  }
}

TEST_CASE("spectral diagnostics") {
  SECTION("exact build sits at the bounds") {
    GeneratorParams p;
    p.condition = 100.0;
    const DenseMatrix a =
        generate_matrix(MatrixKind::geometric_spectrum, 48, p, 8);
    BuildConfig cfg;
    cfg.epsilon_tol = 1e-9;
    const SpectralDiagnostics d =
        spectral_diagnostics(build_adaptive(a, cfg), a);
    REQUIRE(d.kappa_h == Catch::Approx(d.kappa_a).epsilon(1e-9));
    REQUIRE(d.thm1c_applicable);
    REQUIRE(d.thm3_applicable);
    REQUIRE(d.pass_thm1c);
    REQUIRE(d.pass_thm3);
    REQUIRE(d.bound_thm1c == Catch::Approx(d.kappa_a).epsilon(1e-9));
  }
  SECTION("lossy kernel build keeps both bounds") {
    const DenseMatrix a =
        generate_matrix(MatrixKind::kernel_band, 128, {}, 0);
    BuildConfig cfg;
    cfg.epsilon_tol = 1e-2;
    const SpectralDiagnostics d =
        spectral_diagnostics(build_adaptive(a, cfg), a);
    REQUIRE(d.tau_measured > 0.0);
    REQUIRE(d.thm1c_applicable);
    REQUIRE(d.pass_thm1c);
    REQUIRE(d.thm3_applicable);
    REQUIRE(d.pass_thm3);
  }
  SECTION("ill-conditioned family passes or flags, never fails") {
    for (double kappa : {1e2, 1e4, 1e6}) {
      GeneratorParams p;
      p.condition = kappa;
      const DenseMatrix a =
          generate_matrix(MatrixKind::geometric_spectrum, 64, p, 5);
      for (double eps : {1e-3, 1e-8}) {
        BuildConfig cfg;
        cfg.epsilon_tol = eps;
        const SpectralDiagnostics d =
            spectral_diagnostics(build_adaptive(a, cfg), a);
        if (d.thm1c_applicable) REQUIRE(d.pass_thm1c);
        if (d.thm3_applicable) REQUIRE(d.pass_thm3);
      }
    }
  }
}

TEST_CASE("adversarial-form condition bound on random norm-bounded noise") {
  GeneratorParams p;
  p.condition = 1e2;
  const DenseMatrix a =
      generate_matrix(MatrixKind::geometric_spectrum, 64, p, 3);
  BuildConfig cfg;
  cfg.epsilon_tol = 1e-6;
  const DenseMatrix r = reconstruct(build_adaptive(a, cfg));
  const SpectrumReport sh = spectrum(r);
  const double delta = 0.1 * sh.sigma_min;
  for (int seed = 0; seed < 20; ++seed) {
    DenseMatrix dh(64, 64);
    Rng rng(mix_seed(seed, 0xadd5ULL));
    for (double& x : dh.entries) x = rng.gaussian();
    const double s2 = spectral_norm(dh);
    for (double& x : dh.entries) x *= delta / s2;
    const SpectrumReport sp = spectrum(add(r, dh));
    REQUIRE(sp.condition_number <=
            sh.condition_number * (1.0 + delta / sh.sigma_min) *
                (1.0 + 1e-6));
  }
}

TEST_CASE("tolerance ladder is monotone in error and storage") {
  const DenseMatrix a = generate_matrix(MatrixKind::kernel_band, 128, {}, 0);
  double prev_err = std::numeric_limits<double>::infinity();
  std::size_t prev_stored = 0;
  for (double eps : {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8}) {
    BuildConfig cfg;
    cfg.epsilon_tol = eps;
    const HMatrix h = build_adaptive(a, cfg);
    const double err = measured_error(h, a).global;
    REQUIRE(err <= prev_err);
    REQUIRE(h.stored_scalars >= prev_stored);
    prev_err = err;
    prev_stored = h.stored_scalars;
  }
}

TEST_CASE("storage grows subquadratically on the kernel family") {
  std::vector<double> log_n, log_s;
  for (std::size_t n : {256u, 512u, 1024u, 2048u}) {
    const DenseMatrix a = generate_matrix(MatrixKind::kernel_band, n, {}, 0);
    BuildConfig cfg;
    cfg.epsilon_tol = 1e-5;
    const HMatrix h = build_adaptive(a, cfg);
    log_n.push_back(std::log(static_cast<double>(n)));
    log_s.push_back(std::log(static_cast<double>(h.stored_scalars)));
  }
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < log_n.size(); ++i) {
    mx += log_n[i];
    my += log_s[i];
  }
  mx /= static_cast<double>(log_n.size());
  my /= static_cast<double>(log_s.size());
  double num = 0, den = 0;
  for (std::size_t i = 0; i < log_n.size(); ++i) {
    num += (log_n[i] - mx) * (log_s[i] - my);
    den += (log_n[i] - mx) * (log_n[i] - mx);
  }
  REQUIRE(num / den < 1.5);
}
