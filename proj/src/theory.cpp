#include "saflab/theory.hpp"

#include <cmath>
#include <cstdint>
#include <utility>

#include "saflab/errors.hpp"
#include "saflab/kernels.hpp"

namespace saflab {

namespace {

void check_moments_match(const MomentSet& ms, const AlgoConfig& cfg) {
  if (ms.m != cfg.filter_len) {
    throw dimension_error("theory: moment set estimated for M=" +
                          std::to_string(ms.m) + ", config has M=" +
                          std::to_string(cfg.filter_len));
  }
  if (ms.n_subbands != cfg.n_subbands) {
    throw dimension_error("theory: moment set and config disagree on N");
  }
}

// Reuse-combination matrix C (MP x MP): first block row [b0 I .. b_{P-1} I],
// shifted identity below.
Matrix build_c(std::span<const double> beta, int m, int p) {
  Matrix c(std::size_t(m) * p, std::size_t(m) * p);
  for (int q = 0; q < p; ++q) {
    for (int r = 0; r < m; ++r) c(r, std::size_t(q) * m + r) = beta[q];
  }
  for (std::size_t j = 0; j + m < c.cols(); ++j) c(m + j, j) = 1.0;
  return c;
}

// Columns of C hold at most two entries; enough structure to apply C (x) C
// column-wise without materializing it.
struct SparseCols {
  // per column: list of (row, value)
  std::vector<std::vector<std::pair<std::size_t, double>>> cols;
};

SparseCols c_columns(std::span<const double> beta, int m, int p) {
  SparseCols sc;
  const std::size_t mp = std::size_t(m) * p;
  sc.cols.resize(mp);
  for (std::size_t j = 0; j < mp; ++j) {
    std::size_t q = j / m;
    std::size_t r = j % m;
    sc.cols[j].push_back({r, beta[q]});
    if (j + m < mp) sc.cols[j].push_back({m + j, 1.0});
  }
  return sc;
}

uint64_t splitmix64(uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

MeanModel build_mean_model(const MomentSet& ms, const AlgoConfig& cfg,
                           std::span<const double> w_o) {
  cfg.validate();
  check_moments_match(ms, cfg);
  const int m = cfg.filter_len;
  const int p = cfg.reuse_depth;
  if (w_o.size() != std::size_t(m)) {
    throw dimension_error("build_mean_model: w_o length != M");
  }
  const std::vector<double> beta = beta_weights(cfg.alpha, p);

  MeanModel model;
  model.m = m;
  model.p = p;
  model.xi = build_c(beta, m, p);
  // Left-multiply the top block row by (I - mu ea): the block embedding of
  // ea touches only the first M rows.
  // Top block row of C is [b0 I ... b_{P-1} I], so the result rows are
  // beta_q (I - mu ea).
  for (int q = 0; q < p; ++q) {
    for (int j = 0; j < m; ++j) {
      for (int i = 0; i < m; ++i) {
        model.xi(i, std::size_t(q) * m + j) -=
            cfg.step_size * ms.ea(i, j) * beta[q];
      }
    }
  }
  model.state.resize(std::size_t(m) * p);
  for (int q = 0; q < p; ++q) {
    std::copy(w_o.begin(), w_o.end(), model.state.begin() + std::size_t(q) * m);
  }
  return model;
}

MeanTrajectory mean_trajectory(const MomentSet& ms, const AlgoConfig& cfg,
                               std::span<const double> w_o, int64_t n_iters) {
  MeanModel model = build_mean_model(ms, cfg, w_o);
  const int m = model.m;

  MeanTrajectory out;
  out.rho_xi = spectral_radius_estimate(model.xi);
  out.ew.reserve(n_iters);
  std::vector<double> next(model.state.size());
  for (int64_t k = 0; k < n_iters; ++k) {
    std::vector<double> ew(m);
    for (int i = 0; i < m; ++i) ew[i] = w_o[i] - model.state[i];
    out.ew.push_back(std::move(ew));
    matvec_into(model.xi, model.state, next);
    model.state.swap(next);
  }
  return out;
}

double stability_bound(const MomentSet& ms) {
  EigPair top = max_eig_sym(ms.ea);
  if (!(top.value > 0.0)) {
    throw numeric_error("stability_bound: lambda_max(E{A}) <= 0 (degenerate input)");
  }
  return 2.0 / top.value;
}

MsdModel build_f(const MomentSet& ms, const AlgoConfig& cfg,
                 double sigma_eta_sq, std::span<const double> w_o,
                 NoiseTermVariant variant) {
  cfg.validate();
  check_moments_match(ms, cfg);
  if (!(sigma_eta_sq >= 0.0)) {
    throw config_error("build_f: sigma_eta_sq must be >= 0");
  }
  const std::size_t m = cfg.filter_len;
  const std::size_t p = cfg.reuse_depth;
  const std::size_t mp = m * p;
  const std::size_t n2 = mp * mp;
  const double mu = cfg.step_size;
  if (!w_o.empty() && w_o.size() != m) {
    throw dimension_error("build_f: w_o length != M");
  }
  const std::vector<double> beta = beta_weights(cfg.alpha, cfg.reuse_depth);

  // Bracket = I - mu (I (x) EA) - mu (EA (x) I) + mu^2 embed(eaa), where EA
  // is the block embedding of ea (top-left M x M of an MP x MP zero matrix)
  // and embed(eaa) scatters E{A (x) A} onto the index pairs that hit the
  // top-left blocks on both factors.
  Matrix bracket(n2, n2);
  for (std::size_t d = 0; d < n2; ++d) bracket(d, d) = 1.0;
  for (std::size_t b = 0; b < mp; ++b) {
    for (std::size_t j = 0; j < m; ++j) {
      double* colp = bracket.col(b * mp + j);
      for (std::size_t i = 0; i < m; ++i) {
        colp[b * mp + i] -= mu * ms.ea(i, j);
      }
    }
  }
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t r = 0; r < mp; ++r) {
      double* colp = bracket.col(j * mp + r);
      for (std::size_t i = 0; i < m; ++i) {
        colp[i * mp + r] -= mu * ms.ea(i, j);
      }
    }
  }
  const double mu2 = mu * mu;
  for (std::size_t j1 = 0; j1 < m; ++j1) {
    for (std::size_t j2 = 0; j2 < m; ++j2) {
      double* colp = bracket.col(j1 * mp + j2);
      const double* src = ms.eaa.col(j1 * m + j2);
      for (std::size_t i1 = 0; i1 < m; ++i1) {
        for (std::size_t i2 = 0; i2 < m; ++i2) {
          colp[i1 * mp + i2] += mu2 * src[i1 * m + i2];
        }
      }
    }
  }

  // F = bracket * (C (x) C). Columns of C (x) C have at most four entries:
  // F[:, j1*MP+j2] = sum c1 c2 * bracket[:, i1*MP+i2].
  SparseCols sc = c_columns(beta, int(m), int(p));
  MsdModel model;
  model.f = Matrix(n2, n2);
  for (std::size_t j1 = 0; j1 < mp; ++j1) {
    for (std::size_t j2 = 0; j2 < mp; ++j2) {
      double* fcol = model.f.col(j1 * mp + j2);
      for (auto [i1, c1] : sc.cols[j1]) {
        for (auto [i2, c2] : sc.cols[j2]) {
          kern::axpy(c1 * c2, bracket.col(i1 * mp + i2), fcol, n2);
        }
      }
    }
  }

  // noise_vec = mu^2 vec(E{B B'}): sigma^2 rb sits in the top-left M x M
  // block of the MP x MP noise matrix.
  model.noise_vec.assign(n2, 0.0);
  if (sigma_eta_sq > 0.0) {
    const Matrix& rb =
        (variant == NoiseTermVariant::diagonal) ? ms.rb_diag : ms.rb;
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t i = 0; i < m; ++i) {
        model.noise_vec[j * mp + i] = mu2 * sigma_eta_sq * rb(i, j);
      }
    }
  }

  // phi(0) = (ones(P,P)) (x) w_o w_o' from the all-zero weight history.
  model.phi = Matrix(mp, mp);
  if (!w_o.empty()) {
    for (std::size_t qr = 0; qr < p; ++qr) {
      for (std::size_t qc = 0; qc < p; ++qc) {
        for (std::size_t j = 0; j < m; ++j) {
          for (std::size_t i = 0; i < m; ++i) {
            model.phi(qr * m + i, qc * m + j) = w_o[i] * w_o[j];
          }
        }
      }
    }
  }

  model.mu = mu;
  model.m = int(m);
  model.p = int(p);
  return model;
}

std::vector<double> phi_block_traces(const MsdModel& model) {
  std::vector<double> traces(model.p, 0.0);
  for (int q = 0; q < model.p; ++q) {
    for (int i = 0; i < model.m; ++i) {
      std::size_t d = std::size_t(q) * model.m + i;
      traces[q] += model.phi(d, d);
    }
  }
  return traces;
}

MsdSeries msd_transient(MsdModel& model, int64_t n_iters) {
  const std::size_t mp = std::size_t(model.m) * model.p;
  const std::size_t n2 = mp * mp;
  std::vector<double> v = vec(model.phi);
  std::vector<double> next(n2);

  MsdSeries out;
  out.msd.reserve(n_iters);
  for (int64_t k = 0; k < n_iters; ++k) {
    double msd = 0.0;
    for (int i = 0; i < model.m; ++i) msd += v[std::size_t(i) * mp + i];
    out.msd.push_back(msd);
    if (!std::isfinite(msd) || std::abs(msd) > 1e12) {
      out.diverged = true;
      break;
    }

    matvec_into(model.f, v, next);
    kern::axpy(1.0, model.noise_vec.data(), next.data(), n2);
    v.swap(next);
    // Resymmetrize: phi is an expectation of an outer product.
    for (std::size_t j = 0; j < mp; ++j) {
      for (std::size_t i = 0; i < j; ++i) {
        double a = v[j * mp + i];
        double b = v[i * mp + j];
        double s = 0.5 * (a + b);
        v[j * mp + i] = s;
        v[i * mp + j] = s;
      }
    }

    if ((k + 1) % 100 == 0) {
      // PSD spot check with fixed probes.
      double fro = std::sqrt(kern::sumsq(v.data(), n2));
      uint64_t st = 0x5AF1AB0004ULL;
      std::vector<double> x(mp);
      for (int probe = 0; probe < 8; ++probe) {
        for (std::size_t i = 0; i < mp; ++i) {
          x[i] = double(splitmix64(st) >> 11) / double(1ULL << 53) - 0.5;
        }
        double xx = kern::sumsq(x.data(), mp);
        double quad = 0.0;
        for (std::size_t j = 0; j < mp; ++j) {
          quad += x[j] * kern::dot(v.data() + j * mp, x.data(), mp);
        }
        if (quad < -1e-8 * std::max(1.0, fro) * xx) out.psd_ok = false;
      }
    }
  }
  std::copy(v.begin(), v.end(), model.phi.data());
  return out;
}

SteadyState msd_steady_state(const MsdModel& model) {
  const std::size_t mp = std::size_t(model.m) * model.p;
  SteadyState out;
  out.rho_f = spectral_radius_estimate(model.f);
  if (!(out.rho_f < 1.0)) {
    throw numeric_error("msd_steady_state: mean-square unstable, rho(F) ~= " +
                        std::to_string(out.rho_f) + " >= 1");
  }
  Matrix i_minus_f = model.f;
  kern::scale(-1.0, i_minus_f.data(), i_minus_f.size());
  for (std::size_t d = 0; d < i_minus_f.rows(); ++d) i_minus_f(d, d) += 1.0;
  std::vector<double> x = solve(i_minus_f, model.noise_vec);

  out.block_traces.assign(model.p, 0.0);
  for (int q = 0; q < model.p; ++q) {
    for (int i = 0; i < model.m; ++i) {
      std::size_t d = std::size_t(q) * model.m + i;
      out.block_traces[q] += x[d * mp + d];
    }
  }
  double total = 0.0;
  for (double t : out.block_traces) total += t;
  out.msd = total / double(model.p);
  return out;
}

StabilityReport mean_square_stability(const MsdModel& model) {
  StabilityReport report;
  report.rho_f = spectral_radius_estimate(model.f);
  report.mean_square_window_ok = report.rho_f < 1.0 - 1e-6;
  return report;
}

StabilityReport stability_report(const MomentSet& ms, const AlgoConfig& cfg) {
  StabilityReport report;
  report.mu_max_mean = stability_bound(ms);

  std::vector<double> zeros(cfg.filter_len, 0.0);
  MeanModel mean = build_mean_model(ms, cfg, zeros);
  report.rho_xi = spectral_radius_estimate(mean.xi);

  MsdModel msd = build_f(ms, cfg);
  report.rho_f = spectral_radius_estimate(msd.f);
  report.mean_square_window_ok = report.rho_f < 1.0 - 1e-6;
  return report;
}

SubbandNoise subband_noise_variances(const FilterBank& fb,
                                     double sigma_eta_sq) {
  if (!(sigma_eta_sq >= 0.0)) {
    throw config_error("subband_noise_variances: sigma_eta_sq must be >= 0");
  }
  SubbandNoise out;
  out.per_subband.resize(fb.n_subbands);
  for (int i = 0; i < fb.n_subbands; ++i) {
    out.per_subband[i] =
        sigma_eta_sq * kern::sumsq(fb.h_matrix.col(i), fb.filter_len);
  }
  out.paraunitary_alternative = sigma_eta_sq / double(fb.n_subbands);
  return out;
}

}  // namespace saflab
