#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace qadia {

using cplx = std::complex<double>;

inline constexpr double pi = 3.14159265358979323846;

/// Malformed user input: config files, parameter maps, catalog lookups.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// The requested time grid cannot resolve the dynamics; carries a usable
/// step count so callers (and the CLI) can retry.
struct ResolutionError : std::runtime_error {
  long suggested_steps;
  ResolutionError(const std::string& msg, long suggested)
      : std::runtime_error(msg), suggested_steps(suggested) {}
};

/// Instantaneous spectrum degenerate below tolerance; couplings diverge.
struct GapClosureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Operation exists but not for the requested variant (noise kind, context).
struct UnsupportedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// SplitMix64 mix function.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Counter-based sub-seed for trajectory `index` of an ensemble rooted at
/// `base`. Independent of execution order, so parallel ensembles reproduce.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  return splitmix64(base ^ splitmix64(index + 1));
}

/// Uniform time grid over [0, t_end] with `steps` intervals.
inline std::vector<double> uniform_grid(double t_end, int steps) {
  std::vector<double> g(static_cast<std::size_t>(steps) + 1);
  for (int i = 0; i <= steps; ++i) g[static_cast<std::size_t>(i)] = t_end * i / steps;
  return g;
}

/// Discretization shared by frames, noise paths and solvers. Solvers step on
/// the full grid (step h); coefficient caches live on a twice-finer master
/// grid (step h/2) so one-step methods can read exact midpoint values.
struct SolverGrid {
  double t_end = 1.0;
  int steps = 1000;

  double h() const { return t_end / steps; }
  double delta() const { return 0.5 * t_end / steps; }
  int n_master() const { return 2 * steps + 1; }
  int n_full() const { return steps + 1; }
  double master_time(int j) const { return t_end * j / (2.0 * steps); }
  double full_time(int i) const { return t_end * i / static_cast<double>(steps); }

  std::vector<double> full_grid() const { return uniform_grid(t_end, steps); }
  std::vector<double> master_grid() const { return uniform_grid(t_end, 2 * steps); }

  void validate() const {
    if (!(t_end > 0.0)) throw ConfigError("solver t_end must be positive");
    if (steps < 10) throw ConfigError("solver steps must be at least 10");
  }
};

inline double sqr(double x) { return x * x; }

}  // namespace qadia
