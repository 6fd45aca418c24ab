#include "saflab/filterbank.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "saflab/errors.hpp"
#include "saflab/kernels.hpp"

namespace saflab {

namespace {

constexpr double kPi = std::numbers::pi;
// Kaiser shape parameter for ~60 dB stopband attenuation.
constexpr double kKaiserBeta = 5.65326;

// Modified Bessel function of the first kind, order zero (power series).
double bessel_i0(double x) {
  double sum = 1.0;
  double term = 1.0;
  double half_x = x / 2.0;
  for (int k = 1; k < 64; ++k) {
    term *= (half_x / k) * (half_x / k);
    sum += term;
    if (term < 1e-18 * sum) break;
  }
  return sum;
}

}  // namespace

double FilterBank::total_energy() const {
  double e = 0.0;
  for (const auto& h : filters) e += kern::sumsq(h.data(), h.size());
  return e;
}

namespace {

FilterBank build_bank(int big_n, int len, double cutoff) {
  const double center = (len - 1) / 2.0;

  // Kaiser-windowed sinc prototype; computed on the first half and mirrored
  // so the symmetry p(l) = p(L-1-l) is exact.
  std::vector<double> proto(len, 0.0);
  const double i0_beta = bessel_i0(kKaiserBeta);
  for (int l = 0; l < (len + 1) / 2; ++l) {
    double x = l - center;
    double sinc = (x == 0.0) ? cutoff / kPi : std::sin(cutoff * x) / (kPi * x);
    double t = 2.0 * l / (len - 1) - 1.0;
    double win = bessel_i0(kKaiserBeta * std::sqrt(1.0 - t * t)) / i0_beta;
    proto[l] = sinc * win;
    proto[len - 1 - l] = proto[l];
  }

  // Cosine modulation, then one global scale so sum_i ||h_i||^2 = 1.
  std::vector<std::vector<double>> filters(big_n, std::vector<double>(len));
  for (int i = 0; i < big_n; ++i) {
    double phase = ((i % 2 == 0) ? 1.0 : -1.0) * kPi / 4.0;
    for (int l = 0; l < len; ++l) {
      filters[i][l] =
          2.0 * proto[l] *
          std::cos((kPi / big_n) * (i + 0.5) * (l - center) + phase);
    }
  }
  double energy = 0.0;
  for (const auto& h : filters) energy += kern::sumsq(h.data(), h.size());
  if (energy <= 0.0) {
    throw numeric_error("design_cmfb: degenerate prototype (zero energy)");
  }
  const double s = 1.0 / std::sqrt(energy);
  for (auto& h : filters) kern::scale(s, h.data(), h.size());
  kern::scale(s, proto.data(), proto.size());

  FilterBank fb;
  fb.n_subbands = big_n;
  fb.filter_len = len;
  fb.prototype = std::move(proto);
  fb.h_matrix = Matrix(len, big_n);
  for (int i = 0; i < big_n; ++i) {
    std::copy(filters[i].begin(), filters[i].end(), fb.h_matrix.col(i));
  }
  fb.filters = std::move(filters);
  return fb;
}

}  // namespace

FilterBank design_cmfb(int n_subbands, int filter_len) {
  if (n_subbands < 1) {
    throw config_error("design_cmfb: n_subbands must be >= 1");
  }
  if (filter_len < 2 || filter_len % (2 * n_subbands) != 0) {
    throw config_error(
        "design_cmfb: filter_len must be a positive multiple of 2*n_subbands "
        "(got L=" +
        std::to_string(filter_len) + ", N=" + std::to_string(n_subbands) + ")");
  }

  // The nominal band edge is pi/(2N). The sinc cutoff is widened by a
  // deterministic grid search (in units of the transition width 2pi/L) so
  // adjacent bands cross over near half power instead of the sinc's
  // quarter-power point; picked to minimize the power-complementarity
  // residual.
  const double nominal = kPi / (2.0 * n_subbands);
  const double step = 2.0 * kPi / filter_len;
  FilterBank best;
  double best_residual = 0.0;
  bool have_best = false;
  for (int c = 0; c <= 100; ++c) {
    double cutoff = nominal + 0.01 * c * step;
    if (cutoff >= 0.95 * kPi) break;
    FilterBank fb = build_bank(n_subbands, filter_len, cutoff);
    double residual = power_complementarity_residual(fb, 256);
    if (!have_best || residual < best_residual) {
      best = std::move(fb);
      best_residual = residual;
      have_best = true;
    }
  }
  return best;
}

void subband_regressors_into(const FilterBank& fb,
                             std::span<const double> fullband_window,
                             Matrix& out) {
  const std::size_t len = fb.filter_len;
  if (fullband_window.size() < len) {
    throw dimension_error("subband_regressors: window shorter than filter");
  }
  const std::size_t m = fullband_window.size() - len + 1;
  if (out.rows() != m || out.cols() != std::size_t(fb.n_subbands)) {
    out = Matrix(m, fb.n_subbands);
  }
  // With the window newest-first, u_i(r) = sum_l window[r+l] h_i(l).
  for (int i = 0; i < fb.n_subbands; ++i) {
    const double* h = fb.h_matrix.col(i);
    double* u = out.col(i);
    for (std::size_t r = 0; r < m; ++r) {
      u[r] = kern::dot(fullband_window.data() + r, h, len);
    }
  }
}

Matrix subband_regressors(const FilterBank& fb,
                          std::span<const double> fullband_window) {
  Matrix out;
  subband_regressors_into(fb, fullband_window, out);
  return out;
}

void subband_desired_into(const FilterBank& fb,
                          std::span<const double> desired_window,
                          std::span<double> out) {
  if (desired_window.size() != std::size_t(fb.filter_len)) {
    throw dimension_error("subband_desired: window length != filter length");
  }
  if (out.size() != std::size_t(fb.n_subbands)) {
    throw dimension_error("subband_desired: output length != n_subbands");
  }
  for (int i = 0; i < fb.n_subbands; ++i) {
    out[i] = kern::dot(desired_window.data(), fb.h_matrix.col(i),
                       desired_window.size());
  }
}

std::vector<double> subband_desired(const FilterBank& fb,
                                    std::span<const double> desired_window) {
  std::vector<double> out(fb.n_subbands);
  subband_desired_into(fb, desired_window, out);
  return out;
}

double power_complementarity_residual(const FilterBank& fb, int grid) {
  double worst = 0.0;
  for (int g = 0; g < grid; ++g) {
    double w = kPi * (g + 0.5) / grid;
    double total = 0.0;
    for (const auto& h : fb.filters) {
      double re = 0.0, im = 0.0;
      for (std::size_t l = 0; l < h.size(); ++l) {
        re += h[l] * std::cos(w * double(l));
        im -= h[l] * std::sin(w * double(l));
      }
      total += re * re + im * im;
    }
    worst = std::max(worst, std::abs(total - 1.0));
  }
  return worst;
}

}  // namespace saflab
