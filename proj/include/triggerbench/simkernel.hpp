#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "triggerbench/compute.hpp"
#include "triggerbench/error.hpp"
#include "triggerbench/payload.hpp"

namespace tb {

struct Dims {
  std::size_t nx = 0, ny = 0, nz = 0;

  std::size_t cells() const { return nx * ny * nz; }
  bool operator==(const Dims&) const = default;
};

/// 3D grid of concentrations, row-major (x slowest, z fastest), unit spacing.
class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(Dims d, double fill = 0.0) : dims_(d), values_(d.cells(), fill) {}
  ScalarField(Dims d, std::vector<double> values) : dims_(d), values_(std::move(values)) {
    if (values_.size() != dims_.cells())
      throw ConfigError("field value count " + std::to_string(values_.size()) +
                        " does not match dims " + std::to_string(dims_.cells()));
  }

  const Dims& dims() const { return dims_; }
  std::size_t size() const { return values_.size(); }
  double cell_size() const { return 1.0; }

  std::size_t index(std::size_t i, std::size_t j, std::size_t k) const {
    return (i * dims_.ny + j) * dims_.nz + k;
  }
  double& operator()(std::size_t i, std::size_t j, std::size_t k) { return values_[index(i, j, k)]; }
  double operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return values_[index(i, j, k)];
  }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  bool all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double x) { return std::isfinite(x); });
  }

  bool operator==(const ScalarField&) const = default;

 private:
  Dims dims_{};
  std::vector<double> values_;
};

struct GrayScottParams {
  double Du = 0.2;
  double Dv = 0.1;
  double F = 0.02;
  double k = 0.05;
  double dt = 2.0;
  double noise_amplitude = 1e-7;

  // The Laplacian below is the 7-point stencil normalised by 1/6, whose
  // spectrum lies in [-2, 0]; explicit Euler is stable for dt * D < 1.
  void validate() const {
    if (!(dt > 0)) throw ConfigError("Gray-Scott dt must be positive");
    if (Du < 0 || Dv < 0) throw ConfigError("Gray-Scott diffusion rates must be non-negative");
    if (F < 0 || k < 0) throw ConfigError("Gray-Scott feed/kill rates must be non-negative");
    if (noise_amplitude < 0) throw ConfigError("Gray-Scott noise amplitude must be non-negative");
    if (!(dt * std::max(Du, Dv) < 1.0))
      throw ConfigError("Gray-Scott parameters violate the explicit-Euler stability guard");
  }
};

/// Half-open box [lo, hi) of cells.
struct SeedBox {
  std::size_t lo[3] = {0, 0, 0};
  std::size_t hi[3] = {0, 0, 0};

  bool empty() const { return hi[0] <= lo[0] || hi[1] <= lo[1] || hi[2] <= lo[2]; }
  bool contains(std::size_t i, std::size_t j, std::size_t k) const {
    return i >= lo[0] && i < hi[0] && j >= lo[1] && j < hi[1] && k >= lo[2] && k < hi[2];
  }
};

// Central cube with half-width max(1, n/10) per axis.
inline SeedBox default_seed_box(const Dims& d) {
  SeedBox b;
  const std::size_t n[3] = {d.nx, d.ny, d.nz};
  for (int a = 0; a < 3; ++a) {
    const std::size_t half = std::max<std::size_t>(1, n[a] / 10);
    const std::size_t c = n[a] / 2;
    b.lo[a] = c >= half ? c - half : 0;
    b.hi[a] = std::min(n[a], c + half);
  }
  return b;
}

struct FieldPair {
  ScalarField u;
  ScalarField v;
};

inline FieldPair gs_init(const Dims& dims, const GrayScottParams& params, const SeedBox& seed) {
  params.validate();
  if (dims.cells() == 0) throw ConfigError("Gray-Scott grid must be non-empty");
  const std::size_t n[3] = {dims.nx, dims.ny, dims.nz};
  if (!seed.empty()) {
    for (int a = 0; a < 3; ++a)
      if (seed.hi[a] > n[a]) throw ConfigError("seed box lies outside the grid");
  }
  FieldPair f{ScalarField(dims, 1.0), ScalarField(dims, 0.0)};
  if (seed.empty()) return f;
  for (std::size_t i = seed.lo[0]; i < seed.hi[0]; ++i)
    for (std::size_t j = seed.lo[1]; j < seed.hi[1]; ++j)
      for (std::size_t k = seed.lo[2]; k < seed.hi[2]; ++k) {
        f.u(i, j, k) = 0.25;
        f.v(i, j, k) = 0.5;
      }
  return f;
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Uniform in [-1, 1) from a counter-based key.
inline double noise_at(std::uint64_t key, std::size_t cell) {
  const std::uint64_t r = splitmix64(key + 0x9e3779b97f4a7c15ull * (cell + 1));
  return static_cast<double>(r >> 11) * 0x1.0p-52 - 1.0;
}

}  // namespace detail

/// Counter-based noise key; a step's noise depends only on (seed, step).
struct NoiseKey {
  std::uint64_t seed = 0;
  std::uint64_t step = 0;

  std::uint64_t mixed() const { return detail::splitmix64(seed ^ detail::splitmix64(step + 1)); }
};

/// One explicit-Euler Gray-Scott step with periodic boundaries into (out_u, out_v).
inline void gs_step_into(const ScalarField& u, const ScalarField& v, const GrayScottParams& p,
                         ScalarField& out_u, ScalarField& out_v, NoiseKey noise = {}) {
  const Dims d = u.dims();
  const std::size_t nx = d.nx, ny = d.ny, nz = d.nz;
  const double* U = u.values().data();
  const double* V = v.values().data();
  double* OU = out_u.values().data();
  double* OV = out_v.values().data();
  const bool noisy = p.noise_amplitude > 0.0;
  const std::uint64_t key = noise.mixed();
  constexpr double sixth = 1.0 / 6.0;

  auto cell = [&](std::size_t c, std::size_t xm, std::size_t xp, std::size_t ym, std::size_t yp,
                  std::size_t zm, std::size_t zp) {
    const double uc = U[c], vc = V[c];
    const double lu = (U[xm] + U[xp] + U[ym] + U[yp] + U[zm] + U[zp] - 6.0 * uc) * sixth;
    const double lv = (V[xm] + V[xp] + V[ym] + V[yp] + V[zm] + V[zp] - 6.0 * vc) * sixth;
    const double uvv = uc * vc * vc;
    double du = p.Du * lu - uvv + p.F * (1.0 - uc);
    const double dv = p.Dv * lv + uvv - (p.F + p.k) * vc;
    if (noisy) du += p.noise_amplitude * detail::noise_at(key, c);
    OU[c] = uc + du * p.dt;
    OV[c] = vc + dv * p.dt;
  };

  for (std::size_t i = 0; i < nx; ++i) {
    const std::size_t im = (i + nx - 1) % nx, ip = (i + 1) % nx;
    for (std::size_t j = 0; j < ny; ++j) {
      const std::size_t jm = (j + ny - 1) % ny, jp = (j + 1) % ny;
      const std::size_t row = (i * ny + j) * nz;
      const std::size_t rxm = (im * ny + j) * nz, rxp = (ip * ny + j) * nz;
      const std::size_t rym = (i * ny + jm) * nz, ryp = (i * ny + jp) * nz;
      if (nz == 1) {
        cell(row, rxm, rxp, rym, ryp, row, row);
        continue;
      }
      cell(row, rxm, rxp, rym, ryp, row + nz - 1, row + 1);
      for (std::size_t k = 1; k + 1 < nz; ++k)
        cell(row + k, rxm + k, rxp + k, rym + k, ryp + k, row + k - 1, row + k + 1);
      cell(row + nz - 1, rxm + nz - 1, rxp + nz - 1, rym + nz - 1, ryp + nz - 1, row + nz - 2, row);
    }
  }
}

inline FieldPair gs_step(const ScalarField& u, const ScalarField& v, const GrayScottParams& params,
                         NoiseKey noise = {}) {
  if (!(u.dims() == v.dims())) throw ConfigError("u and v must share dims");
  params.validate();
  FieldPair out{ScalarField(u.dims()), ScalarField(u.dims())};
  gs_step_into(u, v, params, out.u, out.v, noise);
  if (!out.u.all_finite() || !out.v.all_finite())
    throw NumericalDivergence("Gray-Scott step " + std::to_string(noise.step) + " diverged",
                              static_cast<long>(noise.step));
  return out;
}

/// Stateful stepper that reuses its buffers; step numbering starts at 1.
class GrayScott {
 public:
  GrayScott(Dims dims, GrayScottParams params, std::uint64_t seed = 0)
      : GrayScott(dims, params, default_seed_box(dims), seed) {}
  GrayScott(Dims dims, GrayScottParams params, const SeedBox& box, std::uint64_t seed = 0)
      : params_(params), seed_(seed) {
    auto f = gs_init(dims, params_, box);
    u_ = std::move(f.u);
    v_ = std::move(f.v);
    nu_ = ScalarField(dims);
    nv_ = ScalarField(dims);
  }

  void step(std::size_t count = 1) {
    for (std::size_t s = 0; s < count; ++s) {
      ++steps_;
      gs_step_into(u_, v_, params_, nu_, nv_, NoiseKey{seed_, steps_});
      std::swap(u_, nu_);
      std::swap(v_, nv_);
    }
    if (!u_.all_finite() || !v_.all_finite())
      throw NumericalDivergence("Gray-Scott diverged by step " + std::to_string(steps_),
                                static_cast<long>(steps_));
  }

  const ScalarField& u() const { return u_; }
  const ScalarField& v() const { return v_; }
  std::uint64_t steps_taken() const { return steps_; }
  const GrayScottParams& params() const { return params_; }

 private:
  GrayScottParams params_;
  std::uint64_t seed_;
  std::uint64_t steps_ = 0;
  ScalarField u_, v_, nu_, nv_;
};

// Snapshot layout: three little-endian uint64 (nx, ny, nz), then nx*ny*nz
// little-endian IEEE-754 doubles.
inline void write_field(const ScalarField& f, const std::string& path) {
  static_assert(std::endian::native == std::endian::little, "snapshot writer assumes little-endian");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open field snapshot for writing", path);
  const std::uint64_t hdr[3] = {f.dims().nx, f.dims().ny, f.dims().nz};
  out.write(reinterpret_cast<const char*>(hdr), sizeof hdr);
  out.write(reinterpret_cast<const char*>(f.values().data()),
            static_cast<std::streamsize>(f.size() * sizeof(double)));
  if (!out) throw IoError("failed writing field snapshot", path);
}

inline ScalarField read_field(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open field snapshot", path);
  std::uint64_t hdr[3];
  in.read(reinterpret_cast<char*>(hdr), sizeof hdr);
  if (!in) throw IoError("truncated field snapshot header", path);
  Dims d{hdr[0], hdr[1], hdr[2]};
  std::vector<double> vals(d.cells());
  in.read(reinterpret_cast<char*>(vals.data()), static_cast<std::streamsize>(vals.size() * sizeof(double)));
  if (!in) throw IoError("truncated field snapshot body", path);
  return ScalarField(d, std::move(vals));
}

struct SyntheticProducerSpec {
  std::uint64_t payload_bytes = 32 * kMiB;
  double gen_cost_ms = 0.0;
  int steps = 1;

  void validate() const {
    if (payload_bytes == 0) throw ConfigError("payload_bytes must be positive");
    if (steps < 1) throw ConfigError("steps must be >= 1");
    if (gen_cost_ms < 0) throw ConfigError("gen_cost must be non-negative");
  }
};

/// Fills `out` with incompressible bytes that depend only on (seed, step).
inline void fill_payload(std::span<std::uint8_t> out, std::uint64_t seed, int step) {
  const std::uint64_t key = detail::splitmix64(seed ^ detail::splitmix64(static_cast<std::uint64_t>(step)));
  const std::size_t words = out.size() / 8;
  auto* w = reinterpret_cast<std::uint64_t*>(out.data());
  std::uint64_t x = key;
  for (std::size_t i = 0; i < words; ++i) {
    x += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    z ^= z >> 31;
    std::memcpy(w + i, &z, sizeof z);
  }
  if (const std::size_t tail = out.size() % 8; tail) {
    const std::uint64_t z = detail::splitmix64(x + 0x9e3779b97f4a7c15ull);
    std::memcpy(out.data() + words * 8, &z, tail);
  }
}

/// Produces step `step_index`'s payload. Filling the bytes counts against
/// `gen_cost_ms`; the remainder is spent as emulated compute on `cpu`.
inline StepPayload synth_produce(const SyntheticProducerSpec& spec, int step_index, std::uint64_t seed,
                                 ComputeArbiter& cpu, BufferPool* pool = nullptr,
                                 std::string variable = "u") {
  spec.validate();
  if (step_index < 1 || step_index > spec.steps)
    throw ConfigError("step_index " + std::to_string(step_index) + " outside [1, " +
                      std::to_string(spec.steps) + "]");
  std::shared_ptr<ByteBuffer> buf = pool ? pool->acquire(spec.payload_bytes)
                                         : std::make_shared<ByteBuffer>(spec.payload_bytes);
  cpu.run(spec.gen_cost_ms, [&] { fill_payload(buf->span(), seed, step_index); });
  StepPayload p;
  p.step_index = step_index;
  p.variable = std::move(variable);
  p.bytes = std::move(buf);
  p.produced_at = Clock::now();
  return p;
}

inline StepPayload synth_produce(const SyntheticProducerSpec& spec, int step_index, std::uint64_t seed) {
  ComputeArbiter cpu;
  return synth_produce(spec, step_index, seed, cpu);
}

}  // namespace tb
