#include "saflab/moments.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <vector>

#include "saflab/errors.hpp"
#include "saflab/kernels.hpp"

namespace saflab {

NoiseTermVariant parse_noise_variant(const std::string& name) {
  if (name == "exact") return NoiseTermVariant::exact;
  if (name == "diagonal") return NoiseTermVariant::diagonal;
  throw config_error("unknown noise-term variant '" + name +
                     "' (expected exact|diagonal)");
}

const char* noise_variant_name(NoiseTermVariant v) {
  return v == NoiseTermVariant::diagonal ? "diagonal" : "exact";
}

namespace {

constexpr int64_t kChunkSize = 500;

struct ChunkAccum {
  Matrix ea, eaa, rb, rb_diag;
  int64_t accepted = 0;
  int64_t skipped = 0;
};

void symmetrize(Matrix& a) {
  for (std::size_t j = 0; j < a.cols(); ++j) {
    for (std::size_t i = 0; i < j; ++i) {
      double v = 0.5 * (a(i, j) + a(j, i));
      a(i, j) = v;
      a(j, i) = v;
    }
  }
}

ChunkAccum run_chunk(const FilterBank& fb, const InputModel& input, double eps,
                     int m, int64_t count, RngStream rng,
                     const Matrix& gram) {
  const int n = fb.n_subbands;
  const int len = fb.filter_len;
  const std::size_t msz = std::size_t(m);

  ChunkAccum acc;
  acc.ea = Matrix(msz, msz);
  acc.eaa = Matrix(msz * msz, msz * msz);
  acc.rb = Matrix(msz, msz);
  acc.rb_diag = Matrix(msz, msz);

  InputStream stream(input, rng);
  std::vector<double> window(msz + len - 1, 0.0);  // newest first
  auto push = [&](double x) {
    std::move_backward(window.begin(), window.end() - 1, window.end());
    window[0] = x;
  };
  for (int t = 0; t < m + len; ++t) push(stream.next());

  Matrix u_mat(msz, n);
  Matrix a(msz, msz);
  Matrix w_scaled(msz, n);   // U_D L^-1
  Matrix t_mat(msz, n);      // U_D L^-1 G
  std::vector<double> lambda(n);

  for (int64_t s = 0; s < count; ++s) {
    for (int j = 0; j < n; ++j) push(stream.next());
    subband_regressors_into(fb, window, u_mat);

    bool degenerate = false;
    for (int i = 0; i < n; ++i) {
      lambda[i] = eps + kern::sumsq(u_mat.col(i), msz);
      if (lambda[i] == 0.0) degenerate = true;
    }
    if (degenerate) {
      ++acc.skipped;
      continue;
    }

    // A = U_D L^-1 U_D' via rank-one accumulation.
    std::fill(a.data(), a.data() + a.size(), 0.0);
    for (int i = 0; i < n; ++i) {
      const double* u = u_mat.col(i);
      double inv = 1.0 / lambda[i];
      for (std::size_t c = 0; c < msz; ++c) {
        double f = inv * u[c];
        if (f != 0.0) kern::axpy(f, u, a.col(c), msz);
      }
    }
    kern::axpy(1.0, a.data(), acc.ea.data(), a.size());

    // E{A (x) A}: block (i1, j1) of the Kronecker square is A(i1, j1) * A.
    for (std::size_t j1 = 0; j1 < msz; ++j1) {
      for (std::size_t j2 = 0; j2 < msz; ++j2) {
        double* dst = acc.eaa.col(j1 * msz + j2);
        const double* src = a.col(j2);
        for (std::size_t i1 = 0; i1 < msz; ++i1) {
          double f = a(i1, j1);
          if (f != 0.0) kern::axpy(f, src, dst + i1 * msz, msz);
        }
      }
    }

    // Noise kernel, exact form: (U_D L^-1) G (U_D L^-1)' with G = H'H.
    for (int i = 0; i < n; ++i) {
      const double* u = u_mat.col(i);
      double* w = w_scaled.col(i);
      double inv = 1.0 / lambda[i];
      for (std::size_t c = 0; c < msz; ++c) w[c] = inv * u[c];
    }
    std::fill(t_mat.data(), t_mat.data() + t_mat.size(), 0.0);
    for (int j = 0; j < n; ++j) {
      double* tj = t_mat.col(j);
      for (int i = 0; i < n; ++i) {
        double g = gram(i, j);
        if (g != 0.0) kern::axpy(g, w_scaled.col(i), tj, msz);
      }
    }
    for (int i = 0; i < n; ++i) {
      const double* t = t_mat.col(i);
      const double* w = w_scaled.col(i);
      for (std::size_t c = 0; c < msz; ++c) {
        if (w[c] != 0.0) kern::axpy(w[c], t, acc.rb.col(c), msz);
      }
    }

    // Diagonal variant: sum_i ||h_i||^2 u_i u_i' / lambda_i^2.
    for (int i = 0; i < n; ++i) {
      const double* u = u_mat.col(i);
      double f = gram(i, i) / (lambda[i] * lambda[i]);
      for (std::size_t c = 0; c < msz; ++c) {
        double fc = f * u[c];
        if (fc != 0.0) kern::axpy(fc, u, acc.rb_diag.col(c), msz);
      }
    }

    ++acc.accepted;
  }
  return acc;
}

}  // namespace

MomentSet estimate_moments(const FilterBank& fb, const InputModel& input,
                           double eps, int m, int64_t samples, uint64_t seed) {
  input.validate();
  if (m < 1) throw config_error("estimate_moments: M must be >= 1");
  if (samples < 100) throw config_error("estimate_moments: samples must be >= 100");
  if (!(eps >= 0.0)) throw config_error("estimate_moments: eps must be >= 0");

  // G = H'H, shared by all chunks.
  const int n = fb.n_subbands;
  Matrix gram(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      gram(i, j) = kern::dot(fb.h_matrix.col(i), fb.h_matrix.col(j),
                             fb.filter_len);
    }
  }

  const int64_t n_chunks = (samples + kChunkSize - 1) / kChunkSize;
  std::vector<ChunkAccum> parts;
  parts.reserve(n_chunks);
  for (int64_t c = 0; c < n_chunks; ++c) {
    int64_t count = std::min(kChunkSize, samples - c * kChunkSize);
    RngStream rng(seed, stream_purpose::moments_chunk(uint64_t(c)));
    parts.push_back(run_chunk(fb, input, eps, m, count, rng, gram));
  }

  MomentSet ms;
  const std::size_t msz = std::size_t(m);
  ms.ea = Matrix(msz, msz);
  ms.eaa = Matrix(msz * msz, msz * msz);
  ms.rb = Matrix(msz, msz);
  ms.rb_diag = Matrix(msz, msz);
  for (const ChunkAccum& p : parts) {  // fixed chunk order
    kern::axpy(1.0, p.ea.data(), ms.ea.data(), ms.ea.size());
    kern::axpy(1.0, p.eaa.data(), ms.eaa.data(), ms.eaa.size());
    kern::axpy(1.0, p.rb.data(), ms.rb.data(), ms.rb.size());
    kern::axpy(1.0, p.rb_diag.data(), ms.rb_diag.data(), ms.rb_diag.size());
    ms.sample_count += p.accepted;
    ms.skipped += p.skipped;
  }
  if (ms.sample_count == 0) {
    throw numeric_error("estimate_moments: all samples were degenerate");
  }
  const double inv = 1.0 / double(ms.sample_count);
  kern::scale(inv, ms.ea.data(), ms.ea.size());
  kern::scale(inv, ms.eaa.data(), ms.eaa.size());
  kern::scale(inv, ms.rb.data(), ms.rb.size());
  kern::scale(inv, ms.rb_diag.data(), ms.rb_diag.size());
  symmetrize(ms.ea);
  symmetrize(ms.eaa);
  symmetrize(ms.rb);
  symmetrize(ms.rb_diag);

  ms.m = m;
  ms.n_subbands = fb.n_subbands;
  ms.filter_len = fb.filter_len;
  ms.eps = eps;
  ms.input = input;
  ms.seed = seed;
  ms.fb_hash = filterbank_hash(fb);
  return ms;
}

Matrix noise_cov(const MomentSet& ms, double sigma_eta_sq,
                 NoiseTermVariant variant) {
  if (!(sigma_eta_sq >= 0.0)) {
    throw config_error("noise_cov: sigma_eta_sq must be >= 0");
  }
  Matrix out = (variant == NoiseTermVariant::diagonal) ? ms.rb_diag : ms.rb;
  kern::scale(sigma_eta_sq, out.data(), out.size());
  return out;
}

namespace {

uint64_t fnv1a(const void* bytes, std::size_t n, uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(bytes);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ULL;
  }
  return h;
}

template <typename T>
uint64_t fnv1a_value(const T& v, uint64_t h) {
  return fnv1a(&v, sizeof(T), h);
}

}  // namespace

uint64_t filterbank_hash(const FilterBank& fb) {
  uint64_t h = 0xCBF29CE484222325ULL;
  h = fnv1a_value(fb.n_subbands, h);
  h = fnv1a_value(fb.filter_len, h);
  h = fnv1a(fb.h_matrix.data(), fb.h_matrix.size() * sizeof(double), h);
  return h;
}

uint64_t moments_cache_key(const FilterBank& fb, const InputModel& input,
                           double eps, int m, int64_t samples, uint64_t seed) {
  uint64_t h = filterbank_hash(fb);
  int kind = int(input.source_kind);
  h = fnv1a_value(kind, h);
  h = fnv1a_value(input.ar_pole, h);
  h = fnv1a_value(eps, h);
  h = fnv1a_value(m, h);
  h = fnv1a_value(samples, h);
  h = fnv1a_value(seed, h);
  return h;
}

namespace {

constexpr char kMagic[8] = {'S', 'A', 'F', 'M', 'O', 'M', '0', '1'};

void write_matrix(std::FILE* f, const Matrix& m) {
  uint64_t r = m.rows(), c = m.cols();
  std::fwrite(&r, sizeof(r), 1, f);
  std::fwrite(&c, sizeof(c), 1, f);
  std::fwrite(m.data(), sizeof(double), m.size(), f);
}

bool read_matrix(std::FILE* f, Matrix& m) {
  uint64_t r = 0, c = 0;
  if (std::fread(&r, sizeof(r), 1, f) != 1) return false;
  if (std::fread(&c, sizeof(c), 1, f) != 1) return false;
  if (r > (1ULL << 20) || c > (1ULL << 20)) return false;
  m = Matrix(r, c);
  return std::fread(m.data(), sizeof(double), m.size(), f) == m.size();
}

}  // namespace

void save_moments(const std::filesystem::path& path, const MomentSet& ms) {
  std::FILE* f = std::fopen(path.string().c_str(), "wb");
  if (f == nullptr) {
    throw config_error("save_moments: cannot open " + path.string());
  }
  std::fwrite(kMagic, 1, sizeof(kMagic), f);
  int64_t meta_i[6] = {ms.sample_count, ms.skipped, ms.m, ms.n_subbands,
                       ms.filter_len, int64_t(ms.input.source_kind)};
  std::fwrite(meta_i, sizeof(int64_t), 6, f);
  double meta_d[2] = {ms.eps, ms.input.ar_pole};
  std::fwrite(meta_d, sizeof(double), 2, f);
  uint64_t meta_u[2] = {ms.seed, ms.fb_hash};
  std::fwrite(meta_u, sizeof(uint64_t), 2, f);
  write_matrix(f, ms.ea);
  write_matrix(f, ms.eaa);
  write_matrix(f, ms.rb);
  write_matrix(f, ms.rb_diag);
  std::fclose(f);
}

std::optional<MomentSet> load_moments(const std::filesystem::path& path) {
  std::FILE* f = std::fopen(path.string().c_str(), "rb");
  if (f == nullptr) return std::nullopt;
  char magic[8];
  MomentSet ms;
  bool ok = std::fread(magic, 1, sizeof(magic), f) == sizeof(magic) &&
            std::memcmp(magic, kMagic, sizeof(kMagic)) == 0;
  int64_t meta_i[6];
  double meta_d[2];
  uint64_t meta_u[2];
  ok = ok && std::fread(meta_i, sizeof(int64_t), 6, f) == 6;
  ok = ok && std::fread(meta_d, sizeof(double), 2, f) == 2;
  ok = ok && std::fread(meta_u, sizeof(uint64_t), 2, f) == 2;
  ok = ok && read_matrix(f, ms.ea) && read_matrix(f, ms.eaa) &&
       read_matrix(f, ms.rb) && read_matrix(f, ms.rb_diag);
  std::fclose(f);
  if (!ok) return std::nullopt;
  ms.sample_count = meta_i[0];
  ms.skipped = meta_i[1];
  ms.m = int(meta_i[2]);
  ms.n_subbands = int(meta_i[3]);
  ms.filter_len = int(meta_i[4]);
  ms.input.source_kind = InputModel::Source(meta_i[5]);
  ms.eps = meta_d[0];
  ms.input.ar_pole = meta_d[1];
  ms.seed = meta_u[0];
  ms.fb_hash = meta_u[1];
  return ms;
}

}  // namespace saflab
