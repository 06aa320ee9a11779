#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "common.hpp"

namespace qadia {

enum class NoiseKind { None, ShotNoise, GaussianWhite, Deterministic };

inline const char* noise_name(NoiseKind k) {
  switch (k) {
    case NoiseKind::None: return "none";
    case NoiseKind::ShotNoise: return "shot";
    case NoiseKind::GaussianWhite: return "gaussian_white";
    case NoiseKind::Deterministic: return "deterministic";
  }
  return "?";
}

/// Multiplicative modulation c(t) of the Hamiltonian strength j0 + c(t).
///
/// GaussianWhite: delta-correlated, <c(t)c(t')> = Gamma delta(t-t') with
///   Gamma = strength^2 / j0.
/// ShotNoise: biased compound Poisson; spikes at rate W with exponentially
///   distributed amplitudes (mean strength / sqrt(2 W j0)) and the
///   deterministic drift subtracted, so the process is zero-mean and its
///   W -> infinity limit is the Gaussian calibration above.
/// Deterministic: control field c(t) = A sin(nu t); no randomness.
struct NoiseSpec {
  NoiseKind kind = NoiseKind::None;
  double strength = 0.0;   // J >= 0, units of energy
  double shot_rate = 0.0;  // W > 0 (ShotNoise)
  double amplitude = 0.0;  // A (Deterministic)
  double frequency = 0.0;  // nu > 0 (Deterministic)
  std::uint64_t seed = 0;
  double j0 = 1.0;

  static NoiseSpec none() { return NoiseSpec{}; }
  static NoiseSpec gaussian_white(double J, std::uint64_t seed = 0, double j0 = 1.0) {
    NoiseSpec s;
    s.kind = NoiseKind::GaussianWhite;
    s.strength = J;
    s.seed = seed;
    s.j0 = j0;
    return s;
  }
  /// Convenience: Gaussian white noise with a prescribed dephasing intensity
  /// Gamma (strength J = sqrt(Gamma j0)).
  static NoiseSpec gaussian_gamma(double gamma, std::uint64_t seed = 0, double j0 = 1.0) {
    return gaussian_white(std::sqrt(gamma * j0), seed, j0);
  }
  static NoiseSpec shot(double J, double W, std::uint64_t seed = 0, double j0 = 1.0) {
    NoiseSpec s;
    s.kind = NoiseKind::ShotNoise;
    s.strength = J;
    s.shot_rate = W;
    s.seed = seed;
    s.j0 = j0;
    return s;
  }
  static NoiseSpec deterministic(double A, double nu, double j0 = 1.0) {
    NoiseSpec s;
    s.kind = NoiseKind::Deterministic;
    s.amplitude = A;
    s.frequency = nu;
    s.j0 = j0;
    return s;
  }

  double gamma() const { return strength * strength / j0; }
  bool stochastic() const {
    return kind == NoiseKind::GaussianWhite || kind == NoiseKind::ShotNoise;
  }

  void validate() const {
    if (!(j0 > 0.0)) throw ConfigError("noise j0 must be positive");
    if (strength < 0.0) throw ConfigError("noise strength must be >= 0");
    if (kind == NoiseKind::ShotNoise && !(shot_rate > 0.0))
      throw ConfigError("shot noise requires shot_rate > 0");
    if (kind == NoiseKind::Deterministic && !(frequency > 0.0))
      throw ConfigError("deterministic modulation requires frequency > 0");
  }
};

/// One realization of the integrated modulation Phi(t) = int_0^t c(s) ds on a
/// uniform grid. Phi(0) = 0 and the path is a pure function of
/// (spec, grid, seed). Only Phi is observable downstream: every place c
/// enters the dynamics is through phase integrals of dPhi.
struct NoisePath {
  std::vector<double> grid;
  std::vector<double> phi;
  double step = 0.0;
  std::uint64_t seed = 0;

  std::size_t size() const { return grid.size(); }
};

namespace detail {
inline void require_uniform(const std::vector<double>& grid) {
  if (grid.size() < 2) throw ConfigError("noise grid needs at least two points");
  const double h = grid[1] - grid[0];
  if (!(h > 0.0)) throw ConfigError("noise grid must be increasing");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (std::abs((grid[i] - grid[i - 1]) - h) > 1e-9 * std::max(1.0, std::abs(h)))
      throw ConfigError("noise grid must be uniform");
  }
}
}  // namespace detail

/// Draws Phi on `grid` for the given spec. Increments are sampled exactly:
/// Gaussian N(0, Gamma h) per step; shot noise as a Poisson number of spikes
/// per step with Gamma-distributed total amplitude minus the drift W a0 h.
inline NoisePath sample_path(const NoiseSpec& spec, const std::vector<double>& grid,
                             std::uint64_t seed) {
  spec.validate();
  detail::require_uniform(grid);
  NoisePath path;
  path.grid = grid;
  path.step = grid[1] - grid[0];
  path.seed = seed;
  path.phi.assign(grid.size(), 0.0);

  const std::size_t n_steps = grid.size() - 1;
  const double h = path.step;

  switch (spec.kind) {
    case NoiseKind::None:
      break;
    case NoiseKind::Deterministic: {
      const double A = spec.amplitude, nu = spec.frequency;
      for (std::size_t i = 0; i < grid.size(); ++i)
        path.phi[i] = (A / nu) * (1.0 - std::cos(nu * grid[i]));
      break;
    }
    case NoiseKind::GaussianWhite: {
      std::mt19937_64 rng(seed);
      std::normal_distribution<double> gauss(0.0, std::sqrt(spec.gamma() * h));
      for (std::size_t i = 0; i < n_steps; ++i)
        path.phi[i + 1] = path.phi[i] + gauss(rng);
      break;
    }
    case NoiseKind::ShotNoise: {
      std::mt19937_64 rng(seed);
      const double a0 = spec.strength / std::sqrt(2.0 * spec.shot_rate * spec.j0);
      const double drift = spec.shot_rate * a0 * h;
      std::poisson_distribution<long> n_shots(spec.shot_rate * h);
      for (std::size_t i = 0; i < n_steps; ++i) {
        const long n = n_shots(rng);
        double jump = 0.0;
        if (n > 0) {
          std::gamma_distribution<double> total(static_cast<double>(n), a0);
          jump = total(rng);
        }
        path.phi[i + 1] = path.phi[i] + jump - drift;
      }
      break;
    }
  }
  return path;
}

inline NoisePath sample_path(const NoiseSpec& spec, const std::vector<double>& grid) {
  return sample_path(spec, grid, spec.seed);
}

/// Phi(t) - Phi(s) for grid indices; the phase contribution of the noise for
/// a constant gap parameter k = 1.
inline double noise_phase(const NoisePath& path, std::size_t i_s, std::size_t i_t) {
  if (i_t >= path.size() || i_s > i_t)
    throw ConfigError("noise_phase indices out of range");
  return path.phi[i_t] - path.phi[i_s];
}

/// Trapezoidal accumulation sum k_mid dPhi over [s, t] for a k profile given
/// on the same grid; the phase int_s^t c(s') k(s') ds' entering the kernel.
inline double noise_phase(const NoisePath& path, std::span<const double> k,
                          std::size_t i_s, std::size_t i_t) {
  if (i_t >= path.size() || i_s > i_t)
    throw ConfigError("noise_phase indices out of range");
  if (k.size() != path.size())
    throw ConfigError("noise_phase: k profile and path grids differ");
  double acc = 0.0;
  for (std::size_t j = i_s; j < i_t; ++j)
    acc += 0.5 * (k[j] + k[j + 1]) * (path.phi[j + 1] - path.phi[j]);
  return acc;
}

/// Time-based lookup; s and t must coincide with grid points.
inline double noise_phase(const NoisePath& path, double s, double t) {
  const auto locate = [&](double x) -> std::size_t {
    const double idx = x / path.step;
    const auto i = static_cast<std::size_t>(std::llround(idx));
    if (i >= path.size() || std::abs(idx - static_cast<double>(i)) > 1e-6)
      throw ConfigError("noise_phase query off the sampled grid");
    return i;
  };
  return noise_phase(path, locate(s), locate(t));
}

/// Ensemble mean of exp(i int_s^t c k) for Gaussian white noise:
/// exp(-(Gamma/2) int_s^t k^2). Shot noise is accepted in its white-noise
/// limit; deterministic modulation has no ensemble to average over.
inline double analytic_dephasing(const NoiseSpec& spec, std::span<const double> k,
                                 double grid_step, std::size_t i_s, std::size_t i_t) {
  if (spec.kind == NoiseKind::Deterministic)
    throw UnsupportedError("analytic_dephasing: deterministic modulation has no ensemble average");
  if (spec.kind == NoiseKind::None) return 1.0;
  if (i_s > i_t || i_t >= k.size())
    throw ConfigError("analytic_dephasing indices out of range");
  double int_k2 = 0.0;
  for (std::size_t j = i_s; j < i_t; ++j)
    int_k2 += sqr(0.5 * (k[j] + k[j + 1])) * grid_step;
  return std::exp(-0.5 * spec.gamma() * int_k2);
}

/// Constant-k convenience overload.
inline double analytic_dephasing(const NoiseSpec& spec, double k, double s, double t) {
  if (spec.kind == NoiseKind::Deterministic)
    throw UnsupportedError("analytic_dephasing: deterministic modulation has no ensemble average");
  if (spec.kind == NoiseKind::None) return 1.0;
  return std::exp(-0.5 * spec.gamma() * k * k * (t - s));
}

}  // namespace qadia
