#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <deque>
#include <vector>

#include "saflab/filterbank.hpp"
#include "saflab/kernels.hpp"
#include "saflab/signals.hpp"

using namespace saflab;

namespace {

// Independent oracle: per-subband streaming convolution of the input with
// h_i followed by N-fold decimation, collecting the M most recent decimated-
// domain regressor entries u_i(kN-r).
struct StreamingOracle {
  const FilterBank& fb;
  std::deque<double> history;  // x(n), newest at front

  explicit StreamingOracle(const FilterBank& bank) : fb(bank) {}

  void push(double x) {
    history.push_front(x);
    if (history.size() > 4096) history.pop_back();
  }

  // u_i(n) = sum_l h_i(l) x(n - l) with n the newest pushed time.
  double subband_at_lag(int band, int lag) const {
    double acc = 0.0;
    for (int l = 0; l < fb.filter_len; ++l) {
      std::size_t idx = std::size_t(lag + l);
      if (idx < history.size()) acc += fb.filters[band][l] * history[idx];
    }
    return acc;
  }
};

}  // namespace

TEST_CASE("design shapes and normalization") {
  FilterBank fb = design_cmfb(8, 64);
  CHECK(fb.n_subbands == 8);
  CHECK(fb.filter_len == 64);
  CHECK(fb.filters.size() == 8);
  for (const auto& h : fb.filters) CHECK(h.size() == 64);
  CHECK(fb.total_energy() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(fb.h_matrix.rows() == 64);
  CHECK(fb.h_matrix.cols() == 8);
}

TEST_CASE("prototype is symmetric and filters follow the modulation rule") {
  FilterBank fb = design_cmfb(4, 32);
  for (int l = 0; l < 32; ++l) {
    CHECK(fb.prototype[l] == fb.prototype[31 - l]);
  }
  const double pi = 3.14159265358979323846;
  for (int i = 0; i < 4; ++i) {
    double phase = ((i % 2 == 0) ? 1.0 : -1.0) * pi / 4.0;
    for (int l = 0; l < 32; ++l) {
      double expect = 2.0 * fb.prototype[l] *
                      std::cos((pi / 4.0) * (i + 0.5) * (l - 15.5) + phase);
      CHECK(fb.filters[i][l] ==
            doctest::Approx(expect).epsilon(1e-14).scale(1.0));
    }
  }
}

TEST_CASE("degenerate single band is near-allpass") {
  FilterBank fb = design_cmfb(1, 2);
  CHECK(fb.total_energy() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(fb.filters[0][0]) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(fb.filters[0][1]) <= 1e-12);
}

TEST_CASE("power complementarity stays below the diagnostic threshold") {
  CHECK(power_complementarity_residual(design_cmfb(8, 64)) <= 0.1);
  CHECK(power_complementarity_residual(design_cmfb(4, 32)) <= 0.1);
}

TEST_CASE("invalid length multiple is a configuration error") {
  CHECK_THROWS_AS(design_cmfb(8, 63), config_error);
  CHECK_THROWS_AS(design_cmfb(8, 0), config_error);
  CHECK_THROWS_AS(design_cmfb(0, 8), config_error);
}

TEST_CASE("subband regressor passthrough for the single-band bank") {
  FilterBank fb = design_cmfb(1, 2);
  double sgn = fb.filters[0][0];  // +-1
  const int m = 5;
  std::vector<double> window = {1.0, 2.0, 3.0, 4.0, 5.0, 6.0};  // M+L-1 = 6
  Matrix u = subband_regressors(fb, window);
  REQUIRE(u.rows() == m);
  REQUIRE(u.cols() == 1);
  for (int r = 0; r < m; ++r) {
    CHECK(u(r, 0) == doctest::Approx(sgn * window[r]).epsilon(1e-12));
  }
}

TEST_CASE("zero window gives zero regressors and desired") {
  FilterBank fb = design_cmfb(4, 32);
  std::vector<double> win(16 + 31, 0.0);
  Matrix u = subband_regressors(fb, win);
  for (std::size_t i = 0; i < u.size(); ++i) CHECK(u.data()[i] == 0.0);
  std::vector<double> dwin(32, 0.0);
  auto d = subband_desired(fb, dwin);
  for (double v : d) CHECK(v == 0.0);
}

TEST_CASE("dimension errors on wrong window lengths") {
  FilterBank fb = design_cmfb(4, 32);
  std::vector<double> shorty(10, 0.0);
  CHECK_THROWS_AS(subband_regressors(fb, shorty), dimension_error);
  CHECK_THROWS_AS(subband_desired(fb, shorty), dimension_error);
}

TEST_CASE("matrix relations match streaming convolution plus decimation") {
  const int m = 16;
  for (auto [n, l] : {std::pair{8, 64}, std::pair{4, 32}}) {
    FilterBank fb = design_cmfb(n, l);
    StreamingOracle oracle(fb);
    InputModel model{InputModel::Source::gaussian, 0.9};
    InputStream stream(model, RngStream(99, 5));

    std::vector<double> window(m + l - 1, 0.0);
    auto push_window = [&](double x) {
      for (std::size_t j = window.size(); j-- > 1;) window[j] = window[j - 1];
      window[0] = x;
    };

    double worst = 0.0;
    const int total = 10000;
    for (int t = 0; t < total; ++t) {
      double x = stream.next();
      oracle.push(x);
      push_window(x);
      if (t % n != 0 || t < m + l) continue;  // decimated instants only
      Matrix u = subband_regressors(fb, window);
      for (int band = 0; band < n; ++band) {
        for (int r = 0; r < m; ++r) {
          worst = std::max(worst,
                           std::abs(u(r, band) - oracle.subband_at_lag(band, r)));
        }
      }
      // Desired-side relation with the same window semantics.
      std::vector<double> dwin(window.begin(), window.begin() + l);
      auto d = subband_desired(fb, dwin);
      for (int band = 0; band < n; ++band) {
        worst = std::max(worst, std::abs(d[band] - oracle.subband_at_lag(band, 0)));
      }
    }
    CHECK(worst <= 1e-10);
  }
}

TEST_CASE("subband energies are uniform for the cosine modulation") {
  FilterBank fb = design_cmfb(8, 64);
  for (int i = 0; i < 8; ++i) {
    double e = kern::sumsq(fb.h_matrix.col(i), 64);
    CHECK(std::abs(e - 1.0 / 8.0) <= 0.01);
  }
}

TEST_CASE("design is deterministic") {
  FilterBank a = design_cmfb(8, 64);
  FilterBank b = design_cmfb(8, 64);
  CHECK(a.h_matrix == b.h_matrix);
  CHECK(a.prototype == b.prototype);
}
