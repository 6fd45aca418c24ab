#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "saflab/linalg.hpp"

namespace saflab {

// Cosine-modulated analysis filter bank: N filters of length L derived from
// a linear-phase lowpass prototype, globally scaled so that the filter
// energies sum to one.
struct FilterBank {
  int n_subbands = 0;  // N
  int filter_len = 0;  // L
  std::vector<double> prototype;             // length L, symmetric
  std::vector<std::vector<double>> filters;  // N impulse responses h_i
  Matrix h_matrix;                           // L x N, column i = h_i

  // sum_i ||h_i||^2 (1 by construction, kept for diagnostics).
  double total_energy() const;
};

// Designs the bank. The prototype is a Kaiser-windowed sinc lowpass with
// cutoff pi/(2N) and shape parameter 5.65326 (~60 dB stopband); filter i is
//   h_i(l) = 2 p(l) cos( (pi/N)(i+0.5)(l-(L-1)/2) + (-1)^i pi/4 ).
// Deterministic; filter_len must be a positive multiple of 2*n_subbands.
FilterBank design_cmfb(int n_subbands, int filter_len);

// Matrix of decimated subband regressors. `fullband_window` holds the
// M+L-1 most recent fullband input samples, NEWEST FIRST; column i of the
// returned M x N matrix is the i-th subband regressor u_i.
Matrix subband_regressors(const FilterBank& fb,
                          std::span<const double> fullband_window);
// Same, writing into a preallocated M x N matrix.
void subband_regressors_into(const FilterBank& fb,
                             std::span<const double> fullband_window,
                             Matrix& out);

// Decimated subband desired signals. `desired_window` holds the L most
// recent desired samples, newest first; entry i is h_i' * d.
std::vector<double> subband_desired(const FilterBank& fb,
                                    std::span<const double> desired_window);
void subband_desired_into(const FilterBank& fb,
                          std::span<const double> desired_window,
                          std::span<double> out);

// Diagnostic: max over a `grid` point frequency grid (midpoints of [0, pi])
// of | sum_i |H_i(w)|^2 - 1 |. The analysis does not assume the bank is
// paraunitary; this is monitoring only.
double power_complementarity_residual(const FilterBank& fb, int grid = 512);

}  // namespace saflab
