#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "saflab/filterbank.hpp"
#include "saflab/linalg.hpp"
#include "saflab/signals.hpp"

namespace saflab {

// Which form of the noise kernel E{b b'} to use: the exact expression
// (full H'H inside) or the diagonal approximation that keeps only the
// ||h_i||^2 terms.
enum class NoiseTermVariant { exact, diagonal };

NoiseTermVariant parse_noise_variant(const std::string& name);
const char* noise_variant_name(NoiseTermVariant v);

// Monte-Carlo estimates of the input-dependent expectations consumed by the
// statistical models. With A(k) = U_D L^-1 U_D' (L the regularized diagonal
// of subband regressor energies):
//   ea  ~ E{A}            (M x M, symmetrized, PSD)
//   eaa ~ E{A (x) A}      (M^2 x M^2, symmetrized)
//   rb  ~ E{U_D L^-1 H'H L^-1 U_D'}   (noise-normalized: multiply by
//                                      sigma_eta^2 to get E{b b'})
//   rb_diag ~ sum_i ||h_i||^2 E{u_i u_i' / (||u_i||^2+eps)^2}
struct MomentSet {
  Matrix ea;
  Matrix eaa;
  Matrix rb;
  Matrix rb_diag;
  int64_t sample_count = 0;
  int64_t skipped = 0;

  // Config echo.
  int m = 0;
  int n_subbands = 0;
  int filter_len = 0;
  double eps = 0.0;
  InputModel input;
  uint64_t seed = 0;
  uint64_t fb_hash = 0;
};

// Averages over `samples` decimated instants of a continuous input stream
// (burn-in of M+L samples first). Sampling is split into fixed-size chunks
// with disjoint RNG streams and reduced in chunk order, so results are
// bit-reproducible and chunks may run concurrently. Samples whose
// regularized energy is exactly zero are skipped and counted (cannot happen
// for continuous-valued inputs).
MomentSet estimate_moments(const FilterBank& fb, const InputModel& input,
                           double eps, int m, int64_t samples, uint64_t seed);

// sigma_eta^2 * rb (or rb_diag for the diagonal variant).
Matrix noise_cov(const MomentSet& ms, double sigma_eta_sq,
                 NoiseTermVariant variant = NoiseTermVariant::exact);

// Content hash for caching: covers the filter bank coefficients, input
// model, eps, M, sample count and seed.
uint64_t moments_cache_key(const FilterBank& fb, const InputModel& input,
                           double eps, int m, int64_t samples, uint64_t seed);
uint64_t filterbank_hash(const FilterBank& fb);

// Flat binary dump (little-endian doubles; see README for the layout).
void save_moments(const std::filesystem::path& path, const MomentSet& ms);
std::optional<MomentSet> load_moments(const std::filesystem::path& path);

}  // namespace saflab
