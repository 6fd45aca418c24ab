#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "saflab/errors.hpp"
#include "saflab/signals.hpp"

using namespace saflab;

TEST_CASE("rng streams are deterministic and distinct") {
  RngStream a(123, 7);
  RngStream b(123, 7);
  RngStream c(123, 8);
  bool all_equal = true;
  bool any_diff_stream = false;
  for (int i = 0; i < 1000; ++i) {
    uint64_t va = a.next_u64();
    all_equal = all_equal && (va == b.next_u64());
    any_diff_stream = any_diff_stream || (va != c.next_u64());
  }
  CHECK(all_equal);
  CHECK(any_diff_stream);
}

TEST_CASE("pole zero passes the white source through") {
  InputModel model{InputModel::Source::uniform, 0.0};
  auto x = gen_input(model, RngStream(5, 0), 100);
  RngStream ref(5, 0);
  for (double v : x) {
    CHECK(v == 2.0 * (double(ref.next_u64() >> 11) * 0x1.0p-53) - 1.0);
  }
}

TEST_CASE("ar(0.9) gaussian input has the right lag-1 autocorrelation") {
  InputModel model{InputModel::Source::gaussian, 0.9};
  auto x = gen_input(model, RngStream(11, 0), 100000);
  double r0 = 0.0, r1 = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    r0 += x[i] * x[i];
    r1 += x[i] * x[i - 1];
  }
  CHECK(std::abs(r1 / r0 - 0.9) <= 0.02);
}

TEST_CASE("source variances") {
  InputModel uni{InputModel::Source::uniform, 0.0};
  auto u = gen_input(uni, RngStream(13, 0), 100000);
  double var_u = 0.0;
  for (double v : u) var_u += v * v;
  var_u /= double(u.size());
  CHECK(std::abs(var_u - 1.0 / 3.0) <= 0.02 / 3.0);

  InputModel gauss{InputModel::Source::gaussian, 0.0};
  auto g = gen_input(gauss, RngStream(13, 1), 100000);
  double var_g = 0.0;
  for (double v : g) var_g += v * v;
  var_g /= double(g.size());
  CHECK(std::abs(var_g - 1.0) <= 0.02);

  InputModel sgn{InputModel::Source::sign, 0.0};
  auto s = gen_input(sgn, RngStream(13, 2), 1000);
  for (double v : s) CHECK(std::abs(v) == 1.0);
}

TEST_CASE("gen_input is reproducible and validates the pole") {
  InputModel model{InputModel::Source::gaussian, 0.9};
  auto a = gen_input(model, RngStream(17, 3), 500);
  auto b = gen_input(model, RngStream(17, 3), 500);
  CHECK(a == b);

  InputModel bad{InputModel::Source::gaussian, 1.0};
  CHECK_THROWS_AS(gen_input(bad, RngStream(1, 1), 10), config_error);
  CHECK_THROWS_AS(gen_input(model, RngStream(1, 1), 0), config_error);
}

TEST_CASE("noise variance for snr") {
  CHECK(noise_variance_for_snr(1.0, 0.0) == doctest::Approx(1.0));
  CHECK(noise_variance_for_snr(1.0, 10.0) == doctest::Approx(0.1));
  CHECK_THROWS_AS(noise_variance_for_snr(0.0, 10.0), config_error);
  CHECK_THROWS_AS(noise_variance_for_snr(-1.0, 10.0), config_error);
}

TEST_CASE("empirical snr calibration lands within 0.2 dB of target") {
  InputModel model{InputModel::Source::gaussian, 0.9};
  auto sys = gen_unknown_system(16, RngStream(19, 0), UnknownSystemKind::random);
  double power = measure_desired_power(model, sys.coefficients,
                                       RngStream(19, 1), 100000);
  double sigma_sq = noise_variance_for_snr(power, 10.0);

  // Independent realization of the realized SNR.
  double check_power = measure_desired_power(model, sys.coefficients,
                                             RngStream(19, 2), 100000);
  double realized_db = 10.0 * std::log10(check_power / sigma_sq);
  CHECK(std::abs(realized_db - 10.0) <= 0.2);
}

TEST_CASE("random unknown systems are unit norm and reproducible") {
  auto a = gen_unknown_system(16, RngStream(23, 0), UnknownSystemKind::random);
  auto b = gen_unknown_system(16, RngStream(23, 0), UnknownSystemKind::random);
  CHECK(a.coefficients == b.coefficients);
  double norm_sq = 0.0;
  for (double v : a.coefficients) norm_sq += v * v;
  CHECK(std::abs(std::sqrt(norm_sq) - 1.0) <= 1e-12);
}

TEST_CASE("explicit unknown system is copied verbatim") {
  std::vector<double> values = {0.51, -0.04, 0.02, 0.09, 0.22, 0.20,
                                0.13, -0.48, -0.39, 0.32, -0.11, -0.30,
                                0.25, -0.24, 0.6, -0.01};
  auto sys = gen_unknown_system(16, RngStream(1, 1),
                                UnknownSystemKind::explicit_values, values);
  CHECK(sys.coefficients == values);

  std::vector<double> wrong = {1.0, 2.0};
  CHECK_THROWS_AS(gen_unknown_system(16, RngStream(1, 1),
                                     UnknownSystemKind::explicit_values, wrong),
                  config_error);
}

TEST_CASE("source kind parsing round trip") {
  CHECK(parse_source_kind("gaussian") == InputModel::Source::gaussian);
  CHECK(parse_source_kind("uniform") == InputModel::Source::uniform);
  CHECK(parse_source_kind("sign") == InputModel::Source::sign);
  CHECK_THROWS_AS(parse_source_kind("laplace"), config_error);
}
