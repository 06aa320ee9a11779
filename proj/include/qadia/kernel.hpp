#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include "common.hpp"
#include "eigenframe.hpp"
#include "models.hpp"
#include "noise.hpp"

namespace qadia {

/// Memory propagator of the one-component equation for a two-level system:
///
///   g(t,s) = -<E0(t)|dE1(t)> <E1(s)|dE0(s)>
///            * exp( int_s^t ( i E(s') - <E1|dE1> ) ds' ),
///
/// with E = E0 - E1 = (j0 + c) k the (noise-shifted) gap. The exponent splits
/// into unit-modulus factors attached to t and s separately, so the kernel is
/// exactly separable, g(t,s) = u(t) v(s):
///
///   u(t) = -<E0|dE1>(t) e^{ i [Theta(t) + phi1(t)] },
///   v(s) = +<E1|dE0>(s) e^{-i [Theta(s) + phi1(s)] },
///
/// where Theta(t) = int_0^t E (including the noise phase accumulated from the
/// trajectory's Phi increments) and phi1 = -Im int <E1|dE1>. Noise therefore
/// enters only through phases; |u| and |v| are realization-independent.
///
/// KernelContext holds the shared deterministic frame path; each trajectory
/// owns a TrajectoryCache with its noise-dependent u/v tables (O(1) kernel
/// evaluation per grid pair).
class KernelContext {
 public:
  struct TrajectoryCache {
    std::vector<cplx> u, v;          // separable factors, master grid
    std::vector<cplx> exp_phase;     // e^{i Theta}, for the component oracle
    std::vector<double> theta0, theta1;  // noise-aware dynamical phases
    const NoisePath* path = nullptr;
    std::uint64_t seed = 0;
    bool berry_in_kernel = false;    // geometric term absorbed into u, v
  };

  static KernelContext build(const ModelSpec& model, const SolverGrid& grid) {
    return from_frames(FramePath::build(model, grid));
  }

  /// Wraps an existing (possibly re-gauged) frame path.
  static KernelContext from_frames(FramePath frames) {
    KernelContext ctx;
    ctx.frames_ = std::move(frames);
    ctx.baseline_ = ctx.make_cache(nullptr);
    return ctx;
  }

  const FramePath& frames() const { return frames_; }
  const SolverGrid& grid() const { return frames_.grid; }
  const ModelSpec& model() const { return frames_.model; }
  double j0() const { return frames_.j0(); }

  /// Noise-free cache with the geometric term kept explicit.
  const TrajectoryCache& baseline() const { return baseline_; }

  /// Builds the per-trajectory phase tables. `path`, when given, must be
  /// sampled on the master grid. With `berry_in_kernel` the frame is rotated
  /// so the geometric term vanishes from the equation of motion; u and v
  /// absorb the corresponding phases (solvers restore the convention on
  /// output).
  TrajectoryCache make_cache(const NoisePath* path, bool berry_in_kernel = false) const {
    const auto& fp = frames_;
    const int n = fp.n();
    if (path && static_cast<int>(path->size()) != n)
      throw ConfigError("noise path grid does not match the frame path");

    TrajectoryCache c;
    c.path = path;
    c.seed = path ? path->seed : 0;
    c.berry_in_kernel = berry_in_kernel;
    c.u.resize(n);
    c.v.resize(n);
    c.exp_phase.resize(n);
    c.theta0.resize(n);
    c.theta1.resize(n);

    std::vector<double> n0, n1;
    if (path) {
      n0 = noise_energy_accumulation(fp, *path, 0);
      n1 = noise_energy_accumulation(fp, *path, 1);
    }
    const cplx i1(0.0, 1.0);
    for (int j = 0; j < n; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      const EigenFrame& fr = fp.frames[ju];
      c.theta0[ju] = -(fp.int_e0[ju] + (path ? n0[ju] : 0.0));
      c.theta1[ju] = -(fp.int_e1[ju] + (path ? n1[ju] : 0.0));
      const double big_theta = c.theta1[ju] - c.theta0[ju];  // int_0^t E
      double arg = big_theta + fp.phi1[ju];
      if (berry_in_kernel) arg -= fp.beta0[ju];
      c.exp_phase[ju] = std::exp(i1 * big_theta);
      c.u[ju] = -fr.c01 * std::exp(i1 * arg);
      c.v[ju] = fr.c10 * std::exp(-i1 * arg);
    }
    return c;
  }

 private:
  FramePath frames_;
  TrajectoryCache baseline_;
};

/// g(t_jt, t_js) on the master grid for one realization.
inline cplx kernel_tls(const KernelContext& /*ctx*/,
                       const KernelContext::TrajectoryCache& cache, int j_t, int j_s) {
  return cache.u[static_cast<std::size_t>(j_t)] * cache.v[static_cast<std::size_t>(j_s)];
}

/// Gaussian attenuation exponent (Gamma/2) int_s^t k^2 between master points.
inline double dephasing_exponent(const KernelContext& ctx, double gamma, int j_s,
                                 int j_t) {
  return 0.5 * gamma *
         (ctx.frames().int_k2[static_cast<std::size_t>(j_t)] -
          ctx.frames().int_k2[static_cast<std::size_t>(j_s)]);
}

/// Ensemble-averaged kernel: the noise-free kernel damped by the analytic
/// Gaussian dephasing factor. Only meaningful for (the white-noise limit of)
/// Gaussian noise.
inline cplx kernel_averaged(const KernelContext& ctx, const NoiseSpec& spec, int j_t,
                            int j_s) {
  if (spec.kind != NoiseKind::GaussianWhite && spec.kind != NoiseKind::None)
    throw UnsupportedError("kernel_averaged requires Gaussian white noise");
  const cplx bare = kernel_tls(ctx, ctx.baseline(), j_t, j_s);
  if (spec.kind == NoiseKind::None || spec.strength == 0.0) return bare;
  return bare * std::exp(-dephasing_exponent(ctx, spec.gamma(), j_s, j_t));
}

}  // namespace qadia
