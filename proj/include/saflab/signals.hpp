#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace saflab {

// Reproducible random stream: identical (seed, stream_id) pairs yield
// identical sample sequences on every platform. Raw bits come from
// std::mt19937_64 (fully specified by the standard); the distributions are
// implemented here rather than via <random>'s distribution templates, whose
// output is implementation-defined.
class RngStream {
 public:
  RngStream() : RngStream(0, 0) {}
  RngStream(uint64_t seed, uint64_t stream_id);

  uint64_t seed() const { return seed_; }
  uint64_t stream_id() const { return stream_id_; }

  uint64_t next_u64();
  // Uniform on [0, 1).
  double uniform01();
  // Uniform on (0, 1].
  double uniform01_open0();
  // Uniform on [-1, 1).
  double uniform_pm1();
  // Standard normal via the Box-Muller transform (pairs cached).
  double gaussian();
  // Rademacher +-1.
  double sign();

 private:
  uint64_t seed_ = 0;
  uint64_t stream_id_ = 0;
  std::mt19937_64 engine_;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

// Fixed stream-id layout so the purposes never collide: unknown-system
// draw, SNR calibration, per-trial input/noise, moment-estimation chunks.
namespace stream_purpose {
constexpr uint64_t kUnknownSystem = 0x0100000000000000ULL;
constexpr uint64_t kCalibration = 0x0200000000000000ULL;
constexpr uint64_t kTrialBase = 0x0300000000000000ULL;
constexpr uint64_t kMomentsBase = 0x0400000000000000ULL;

inline uint64_t trial_input(uint64_t trial) { return kTrialBase + 2 * trial; }
inline uint64_t trial_noise(uint64_t trial) {
  return kTrialBase + 2 * trial + 1;
}
inline uint64_t moments_chunk(uint64_t chunk) { return kMomentsBase + chunk; }
}  // namespace stream_purpose

// Input signal model: a white source filtered by a first-order
// autoregressive system, x(t) = pole * x(t-1) + v(t) with x(-1) = 0.
// The uniform source drives the AR filter raw (no variance normalization).
struct InputModel {
  enum class Source { gaussian, uniform, sign };
  Source source_kind = Source::gaussian;
  double ar_pole = 0.0;  // |pole| < 1

  void validate() const;
};

InputModel::Source parse_source_kind(const std::string& name);
const char* source_kind_name(InputModel::Source k);

// Streaming generator for an InputModel.
class InputStream {
 public:
  InputStream(const InputModel& model, RngStream rng);
  double next();

 private:
  InputModel model_;
  RngStream rng_;
  double prev_ = 0.0;
};

// Batch generation: n samples of the model from the stream's start.
std::vector<double> gen_input(const InputModel& model, RngStream rng,
                              std::size_t n);

// The system to identify.
struct UnknownSystem {
  std::vector<double> coefficients;  // w_o, length M
};

enum class UnknownSystemKind { random, explicit_values };

// random: entries uniform(-0.5, 0.5), then normalized to unit Euclidean
// norm. explicit: values copied verbatim (must have length m).
UnknownSystem gen_unknown_system(std::size_t m, RngStream rng,
                                 UnknownSystemKind kind,
                                 std::span<const double> values = {});

// sigma_eta^2 = measured_power / 10^(snr_db/10). measured_power must be > 0.
double noise_variance_for_snr(double fb_input_power, double snr_db);

// Empirical power of u'(n) w_o over a calibration run of `samples` steps
// (after a warm-up so the AR process and the regressor window are
// stationary).
double measure_desired_power(const InputModel& model,
                             std::span<const double> w_o, RngStream rng,
                             std::size_t samples = 100000);

}  // namespace saflab
