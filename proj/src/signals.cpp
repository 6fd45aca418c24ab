#include "saflab/signals.hpp"

#include <cmath>
#include <numbers>

#include "saflab/errors.hpp"
#include "saflab/kernels.hpp"

namespace saflab {

namespace {

uint64_t splitmix64(uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

RngStream::RngStream(uint64_t seed, uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
  uint64_t s = seed;
  uint64_t a = splitmix64(s);
  s ^= stream_id * 0xD1342543DE82EF95ULL + 0x2545F4914F6CDD1DULL;
  uint64_t b = splitmix64(s);
  engine_.seed(a ^ (b << 1));
}

uint64_t RngStream::next_u64() { return engine_(); }

double RngStream::uniform01() {
  return double(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform01_open0() {
  return double((next_u64() >> 11) + 1) * 0x1.0p-53;
}

double RngStream::uniform_pm1() { return 2.0 * uniform01() - 1.0; }

double RngStream::gaussian() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  double u1 = uniform01_open0();
  double u2 = uniform01();
  double r = std::sqrt(-2.0 * std::log(u1));
  double theta = 2.0 * std::numbers::pi * u2;
  cached_ = r * std::sin(theta);
  has_cached_ = true;
  return r * std::cos(theta);
}

double RngStream::sign() { return (next_u64() & 1) ? 1.0 : -1.0; }

void InputModel::validate() const {
  if (!(std::abs(ar_pole) < 1.0)) {
    throw config_error("input model: |ar_pole| must be < 1 for stationarity");
  }
}

InputModel::Source parse_source_kind(const std::string& name) {
  if (name == "gaussian") return InputModel::Source::gaussian;
  if (name == "uniform") return InputModel::Source::uniform;
  if (name == "sign") return InputModel::Source::sign;
  throw config_error("input model: unknown source kind '" + name +
                     "' (expected gaussian|uniform|sign)");
}

const char* source_kind_name(InputModel::Source k) {
  switch (k) {
    case InputModel::Source::uniform:
      return "uniform";
    case InputModel::Source::sign:
      return "sign";
    default:
      return "gaussian";
  }
}

InputStream::InputStream(const InputModel& model, RngStream rng)
    : model_(model), rng_(rng) {
  model_.validate();
}

double InputStream::next() {
  double v = 0.0;
  switch (model_.source_kind) {
    case InputModel::Source::gaussian:
      v = rng_.gaussian();
      break;
    case InputModel::Source::uniform:
      v = rng_.uniform_pm1();
      break;
    case InputModel::Source::sign:
      v = rng_.sign();
      break;
  }
  prev_ = model_.ar_pole * prev_ + v;
  return prev_;
}

std::vector<double> gen_input(const InputModel& model, RngStream rng,
                              std::size_t n) {
  if (n < 1) throw config_error("gen_input: n must be >= 1");
  InputStream stream(model, rng);
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = stream.next();
  return x;
}

UnknownSystem gen_unknown_system(std::size_t m, RngStream rng,
                                 UnknownSystemKind kind,
                                 std::span<const double> values) {
  if (m < 1) throw config_error("gen_unknown_system: m must be >= 1");
  UnknownSystem sys;
  if (kind == UnknownSystemKind::explicit_values) {
    if (values.size() != m) {
      throw config_error("gen_unknown_system: explicit values have length " +
                         std::to_string(values.size()) + ", expected " +
                         std::to_string(m));
    }
    sys.coefficients.assign(values.begin(), values.end());
    return sys;
  }
  sys.coefficients.resize(m);
  double norm_sq = 0.0;
  do {
    for (std::size_t i = 0; i < m; ++i) {
      sys.coefficients[i] = rng.uniform01() - 0.5;
    }
    norm_sq = kern::sumsq(sys.coefficients.data(), m);
  } while (norm_sq == 0.0);
  kern::scale(1.0 / std::sqrt(norm_sq), sys.coefficients.data(), m);
  return sys;
}

double noise_variance_for_snr(double fb_input_power, double snr_db) {
  if (!(fb_input_power > 0.0)) {
    throw config_error("noise_variance_for_snr: power must be > 0");
  }
  return fb_input_power / std::pow(10.0, snr_db / 10.0);
}

double measure_desired_power(const InputModel& model,
                             std::span<const double> w_o, RngStream rng,
                             std::size_t samples) {
  const std::size_t m = w_o.size();
  InputStream stream(model, rng);
  std::vector<double> window(m, 0.0);  // newest first
  // Warm-up: fill the window and let the AR transient decay.
  const std::size_t warmup = m + 200;
  for (std::size_t t = 0; t < warmup; ++t) {
    for (std::size_t j = m; j-- > 1;) window[j] = window[j - 1];
    window[0] = stream.next();
  }
  double acc = 0.0;
  for (std::size_t t = 0; t < samples; ++t) {
    for (std::size_t j = m; j-- > 1;) window[j] = window[j - 1];
    window[0] = stream.next();
    double y = kern::dot(window.data(), w_o.data(), m);
    acc += y * y;
  }
  return acc / double(samples);
}

}  // namespace saflab
