#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "saflab/kernels.hpp"
#include "saflab/linalg.hpp"
#include "saflab/moments.hpp"

using namespace saflab;

namespace {

double sym_residual(const Matrix& a) {
  double worst = 0.0;
  for (std::size_t j = 0; j < a.cols(); ++j) {
    for (std::size_t i = 0; i < j; ++i) {
      worst = std::max(worst, std::abs(a(i, j) - a(j, i)));
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("scalar sign-input moments are exact") {
  FilterBank fb = design_cmfb(1, 2);
  InputModel input{InputModel::Source::sign, 0.0};
  MomentSet ms = estimate_moments(fb, input, 0.0, 1, 500, 7);
  CHECK(ms.ea(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(ms.eaa(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(ms.rb(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(ms.rb_diag(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(ms.skipped == 0);
  CHECK(ms.sample_count == 500);
}

TEST_CASE("huge regularizer drives the moments to zero") {
  FilterBank fb = design_cmfb(4, 32);
  InputModel input{InputModel::Source::gaussian, 0.9};
  MomentSet ms = estimate_moments(fb, input, 1e9, 8, 500, 11);
  CHECK(ms.ea.frobenius_norm() <= 1e-6);
  CHECK(ms.eaa.frobenius_norm() <= 1e-6);
}

TEST_CASE("estimates are symmetric and ea is positive semidefinite") {
  FilterBank fb = design_cmfb(8, 64);
  InputModel input{InputModel::Source::gaussian, 0.9};
  MomentSet ms = estimate_moments(fb, input, 1e-3, 16, 2000, 13);
  CHECK(sym_residual(ms.ea) == 0.0);  // symmetrized exactly
  CHECK(sym_residual(ms.eaa) == 0.0);
  CHECK(sym_residual(ms.rb) == 0.0);

  // PSD probe: random Rayleigh quotients stay above -1e-10.
  RngStream rng(17, 0);
  for (int probe = 0; probe < 100; ++probe) {
    std::vector<double> x(16);
    for (auto& v : x) v = rng.uniform_pm1();
    auto ax = matvec(ms.ea, x);
    double quad = kern::dot(x.data(), ax.data(), 16);
    double xx = kern::sumsq(x.data(), 16);
    CHECK(quad / xx >= -1e-10);
  }

  // Eigenvalue estimates live in [0, N].
  EigPair top = max_eig_sym(ms.ea);
  CHECK(top.value >= 0.0);
  CHECK(top.value <= 8.0);
}

TEST_CASE("block embedding of ea preserves the top eigenvalue") {
  FilterBank fb = design_cmfb(8, 64);
  InputModel input{InputModel::Source::gaussian, 0.9};
  MomentSet ms = estimate_moments(fb, input, 1e-3, 8, 1000, 19);
  const int m = 8, p = 3;
  Matrix embedded(m * p, m * p);
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < m; ++i) embedded(i, j) = ms.ea(i, j);
  }
  double lam_ea = max_eig_sym(ms.ea).value;
  double lam_embedded = max_eig_sym(embedded).value;
  CHECK(lam_embedded == doctest::Approx(lam_ea).epsilon(1e-9));
}

TEST_CASE("white single-band trace matches M/(M+eps) within Monte Carlo error") {
  // N=1, L=2 gives h0 ~ the unit impulse, so A = u u' / (||u||^2 + eps) and
  // Tr(A) = ||u||^2 / (||u||^2 + eps). With eps = M the trace is near 1/2
  // and sensitive enough to catch normalization mistakes.
  const int m = 32;
  FilterBank fb = design_cmfb(1, 2);
  InputModel input{InputModel::Source::gaussian, 0.0};
  MomentSet ms = estimate_moments(fb, input, double(m), m, 20000, 23);
  double expected = double(m) / double(m + m);
  CHECK(std::abs(ms.ea.trace() - expected) <= 0.02);
}

TEST_CASE("noise covariance scaling and variants") {
  FilterBank fb = design_cmfb(1, 2);
  InputModel input{InputModel::Source::sign, 0.0};
  MomentSet ms = estimate_moments(fb, input, 0.0, 1, 500, 29);

  Matrix zero = noise_cov(ms, 0.0);
  CHECK(zero.frobenius_norm() == 0.0);

  Matrix scaled = noise_cov(ms, 0.1);
  CHECK(scaled(0, 0) == doctest::Approx(0.1).epsilon(1e-12));

  CHECK_THROWS_AS(noise_cov(ms, -1.0), config_error);
}

TEST_CASE("diagonal noise variant stays within 5% of the exact form") {
  FilterBank fb = design_cmfb(8, 64);
  InputModel input{InputModel::Source::gaussian, 0.9};
  MomentSet ms = estimate_moments(fb, input, 1e-3, 16, 10000, 31);
  Matrix diff = ms.rb;
  kern::axpy(-1.0, ms.rb_diag.data(), diff.data(), diff.size());
  CHECK(diff.frobenius_norm() <= 0.05 * ms.rb.frobenius_norm());
}

TEST_CASE("doubling the sample count moves lambda_max(ea) by less than 1%") {
  FilterBank fb = design_cmfb(8, 64);
  InputModel input{InputModel::Source::gaussian, 0.9};
  MomentSet a = estimate_moments(fb, input, 1e-3, 16, 10000, 37);
  MomentSet b = estimate_moments(fb, input, 1e-3, 16, 20000, 37);
  double la = max_eig_sym(a.ea).value;
  double lb = max_eig_sym(b.ea).value;
  CHECK(std::abs(la - lb) <= 0.01 * la);
}

TEST_CASE("estimation is deterministic and chunk-order stable") {
  FilterBank fb = design_cmfb(4, 32);
  InputModel input{InputModel::Source::uniform, 0.9};
  MomentSet a = estimate_moments(fb, input, 1e-3, 8, 1200, 41);
  MomentSet b = estimate_moments(fb, input, 1e-3, 8, 1200, 41);
  CHECK(a.ea == b.ea);
  CHECK(a.eaa == b.eaa);
  CHECK(a.rb == b.rb);
}

TEST_CASE("preconditions are enforced") {
  FilterBank fb = design_cmfb(4, 32);
  InputModel input{InputModel::Source::gaussian, 0.9};
  CHECK_THROWS_AS(estimate_moments(fb, input, 1e-3, 0, 1000, 1), config_error);
  CHECK_THROWS_AS(estimate_moments(fb, input, 1e-3, 8, 99, 1), config_error);
  CHECK_THROWS_AS(estimate_moments(fb, input, -1.0, 8, 1000, 1), config_error);
}

TEST_CASE("binary dump round trip and cache keys") {
  FilterBank fb = design_cmfb(4, 32);
  InputModel input{InputModel::Source::gaussian, 0.9};
  MomentSet ms = estimate_moments(fb, input, 1e-3, 8, 500, 43);

  auto path = std::filesystem::temp_directory_path() / "saflab_moments_test.bin";
  save_moments(path, ms);
  auto loaded = load_moments(path);
  REQUIRE(loaded.has_value());
  CHECK(loaded->ea == ms.ea);
  CHECK(loaded->eaa == ms.eaa);
  CHECK(loaded->rb == ms.rb);
  CHECK(loaded->rb_diag == ms.rb_diag);
  CHECK(loaded->sample_count == ms.sample_count);
  CHECK(loaded->eps == ms.eps);
  CHECK(loaded->fb_hash == ms.fb_hash);
  std::filesystem::remove(path);

  uint64_t k1 = moments_cache_key(fb, input, 1e-3, 8, 500, 43);
  uint64_t k2 = moments_cache_key(fb, input, 1e-3, 8, 500, 44);
  uint64_t k3 = moments_cache_key(fb, input, 1e-3, 8, 500, 43);
  CHECK(k1 != k2);
  CHECK(k1 == k3);
  CHECK(load_moments("/nonexistent/saflab.bin") == std::nullopt);
}
