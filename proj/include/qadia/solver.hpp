#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "common.hpp"
#include "kernel.hpp"

namespace qadia {

enum class Method { VolterraQuadrature, AuxiliaryODE, ComponentOracle };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::VolterraQuadrature: return "volterra";
    case Method::AuxiliaryODE: return "auxiliary_ode";
    case Method::ComponentOracle: return "component_oracle";
  }
  return "?";
}

struct SolverConfig {
  double t_end = 1.0;
  int steps = 1000;
  Method method = Method::AuxiliaryODE;
  bool include_geometric_term = true;

  SolverGrid grid() const { return SolverGrid{t_end, steps}; }
};

/// One evolved realization. psi0 is the amplitude on the target instantaneous
/// eigenstate; psi1 the recovered orthogonal component; residual the memory
/// integral int_0^t g(t,s) psi0(s) ds, whose smallness signals adiabaticity.
struct TrajectoryResult {
  std::vector<double> grid;
  std::vector<cplx> psi0;
  std::vector<cplx> psi1;
  std::vector<cplx> residual;
  std::vector<double> theta0, theta1;  // noise-aware dynamical phases
  std::vector<Eigen::VectorXcd> full_components;  // component oracle only
  std::uint64_t noise_seed = 0;
};

/// Step budget from the resolution rule h <= min(0.01/j0, 0.1/(j0 k_max),
/// 0.2/W): resolve the fastest deterministic phase and the mean shot spacing.
inline int default_steps(const ModelSpec& model, const NoiseSpec& noise, double t_end) {
  double h = std::min(0.01 / model.j0, 0.1 / (model.j0 * model.k_max(t_end)));
  if (noise.kind == NoiseKind::ShotNoise) h = std::min(h, 0.2 / noise.shot_rate);
  return std::max(10, static_cast<int>(std::ceil(t_end / h)));
}

/// Refuses grids that cannot resolve the largest instantaneous energy.
inline void check_resolution(const KernelContext& ctx, const SolverConfig& cfg) {
  if (cfg.steps < 10)
    throw ResolutionError("solver needs at least 10 steps", 10);
  double max_e = 0.0;
  for (const auto& fr : ctx.frames().frames)
    max_e = std::max(max_e, std::max(std::abs(fr.e0), std::abs(fr.e1)));
  const double h = cfg.t_end / cfg.steps;
  if (h * max_e >= 0.1) {
    const long suggested =
        static_cast<long>(std::ceil(cfg.t_end * max_e / 0.05));
    throw ResolutionError(
        "time step too coarse for the spectral range (h*max|E| >= 0.1); "
        "suggested steps: " + std::to_string(suggested),
        suggested);
  }
}

namespace detail {

struct SolveSetup {
  KernelContext::TrajectoryCache cache;
  bool berry = false;  // geometric term handled via the rotated kernel
};

inline SolveSetup make_setup(const KernelContext& ctx, const NoisePath* noise,
                             const SolverConfig& cfg) {
  if (ctx.grid().steps != cfg.steps || ctx.grid().t_end != cfg.t_end)
    throw ConfigError("solver config grid does not match the kernel context");
  check_resolution(ctx, cfg);
  SolveSetup s;
  s.berry = !cfg.include_geometric_term;
  s.cache = ctx.make_cache(noise, s.berry);
  return s;
}

inline TrajectoryResult init_result(const KernelContext& ctx,
                                    const KernelContext::TrajectoryCache& cache) {
  TrajectoryResult r;
  const int n = ctx.grid().n_full();
  r.grid = ctx.grid().full_grid();
  r.psi0.assign(n, cplx{});
  r.psi1.assign(n, cplx{});
  r.residual.assign(n, cplx{});
  r.theta0.resize(n);
  r.theta1.resize(n);
  for (int i = 0; i < n; ++i) {
    r.theta0[static_cast<std::size_t>(i)] = cache.theta0[static_cast<std::size_t>(2 * i)];
    r.theta1[static_cast<std::size_t>(i)] = cache.theta1[static_cast<std::size_t>(2 * i)];
  }
  r.noise_seed = cache.seed;
  return r;
}

/// Restores the standard frame convention at full grid point i: when the
/// kernel carried the Berry phase, rotate psi0/residual by e^{i beta0} and
/// map the auxiliary accumulator z to psi1 = -e^{i phi1} z.
inline void store_point(const KernelContext& ctx, const SolveSetup& s,
                        TrajectoryResult& r, int i, cplx psi, cplx z) {
  const auto j = static_cast<std::size_t>(2 * i);
  const auto iu = static_cast<std::size_t>(i);
  const auto& fp = ctx.frames();
  const cplx i1(0.0, 1.0);
  const cplx berry_ph = s.berry ? std::exp(i1 * fp.beta0[j]) : cplx(1.0, 0.0);
  r.psi0[iu] = psi * berry_ph;
  r.residual[iu] = s.cache.u[j] * z * berry_ph;
  r.psi1[iu] = -std::exp(i1 * fp.phi1[j]) * z;
}

}  // namespace detail

/// Direct embodiment of the one-component integro-differential equation:
///
///   d/dt psi0(t) = -<E0|dE0> psi0(t) - int_0^t g(t,s) psi0(s) ds,
///
/// advanced by a trapezoidal predictor-corrector (one corrector pass per
/// step, second order). The memory integral is trapezoidal quadrature over
/// the history; with the separable kernel it reduces to running sums over
/// the cached factors, so the whole solve is O(steps) per realization.
inline TrajectoryResult solve_volterra(const KernelContext& ctx, const NoisePath* noise,
                                       const SolverConfig& cfg) {
  auto s = detail::make_setup(ctx, noise, cfg);
  TrajectoryResult r = detail::init_result(ctx, s.cache);
  const auto& fp = ctx.frames();
  const double h = cfg.grid().h();
  const int n_steps = cfg.steps;

  const auto c00 = [&](int j) {
    return s.berry ? cplx{} : fp.frames[static_cast<std::size_t>(j)].c00;
  };
  const auto u = [&](int j) { return s.cache.u[static_cast<std::size_t>(j)]; };
  const auto v = [&](int j) { return s.cache.v[static_cast<std::size_t>(j)]; };

  cplx psi{1.0, 0.0};
  cplx S{};             // trapezoidal history integral int_0^t v psi0
  cplx w = v(0) * psi;  // current integrand sample
  detail::store_point(ctx, s, r, 0, psi, S);

  cplx f = -c00(0) * psi - u(0) * S;
  for (int i = 0; i < n_steps; ++i) {
    const int jn = 2 * (i + 1);
    const cplx psi_p = psi + h * f;
    const cplx S_p = S + 0.5 * h * (w + v(jn) * psi_p);
    const cplx f_p = -c00(jn) * psi_p - u(jn) * S_p;
    psi += 0.5 * h * (f + f_p);
    const cplx w_n = v(jn) * psi;
    S += 0.5 * h * (w + w_n);
    w = w_n;
    f = -c00(jn) * psi - u(jn) * S;
    detail::store_point(ctx, s, r, i + 1, psi, S);
  }
  return r;
}

/// Exact reduction of the separable-kernel equation to a two-variable ODE:
/// with z(t) = int_0^t v(s) psi0(s) ds,
///   d/dt psi0 = -<E0|dE0> psi0 - u(t) z,   d/dt z = v(t) psi0,
/// advanced by classical RK4 (coefficients read at cached half steps).
inline TrajectoryResult solve_auxiliary(const KernelContext& ctx, const NoisePath* noise,
                                        const SolverConfig& cfg) {
  auto s = detail::make_setup(ctx, noise, cfg);
  TrajectoryResult r = detail::init_result(ctx, s.cache);
  const auto& fp = ctx.frames();
  const double h = cfg.grid().h();

  const auto deriv = [&](int j, const std::array<cplx, 2>& y) -> std::array<cplx, 2> {
    const auto ju = static_cast<std::size_t>(j);
    const cplx diag = s.berry ? cplx{} : fp.frames[ju].c00;
    return {-diag * y[0] - s.cache.u[ju] * y[1], s.cache.v[ju] * y[0]};
  };

  std::array<cplx, 2> y{cplx{1.0, 0.0}, cplx{}};
  detail::store_point(ctx, s, r, 0, y[0], y[1]);
  for (int i = 0; i < cfg.steps; ++i) {
    const int j = 2 * i;
    const auto k1 = deriv(j, y);
    const auto k2 = deriv(j + 1, {y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]});
    const auto k3 = deriv(j + 1, {y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]});
    const auto k4 = deriv(j + 2, {y[0] + h * k3[0], y[1] + h * k3[1]});
    y[0] += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
    y[1] += h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
    detail::store_point(ctx, s, r, i + 1, y[0], y[1]);
  }
  return r;
}

/// Full component system in the instantaneous eigenbasis (the rotating
/// representation), integrated by RK4; the oracle against which the
/// one-component solvers are validated:
///   d/dt psi_m = -<Em|dEm> psi_m - sum_{n != m} <Em|dEn> e^{i(theta_n-theta_m)} psi_n.
/// `initial_lab`, when given, sets the initial state in the lab basis
/// (arbitrary component vectors are supported only here).
inline TrajectoryResult solve_components(const KernelContext& ctx, const NoisePath* noise,
                                         const SolverConfig& cfg,
                                         const Vec2* initial_lab = nullptr) {
  auto s = detail::make_setup(ctx, noise, cfg);
  TrajectoryResult r = detail::init_result(ctx, s.cache);
  const auto& fp = ctx.frames();
  const double h = cfg.grid().h();
  const cplx i1(0.0, 1.0);

  // Effective couplings; with the geometric term disabled the frame is
  // re-gauged by gamma0 = beta0, gamma1 = phi1 so both diagonals vanish.
  const auto deriv = [&](int j, const std::array<cplx, 2>& y) -> std::array<cplx, 2> {
    const auto ju = static_cast<std::size_t>(j);
    const EigenFrame& fr = fp.frames[ju];
    const cplx eph = s.cache.exp_phase[ju];  // e^{i(theta1 - theta0)}
    cplx c01 = fr.c01, c10 = fr.c10, d0 = fr.c00, d1 = fr.c11;
    if (s.berry) {
      const cplx tw = std::exp(i1 * (fp.phi1[ju] - fp.beta0[ju]));
      c01 *= tw;
      c10 *= std::conj(tw);
      d0 = d1 = cplx{};
    }
    return {-d0 * y[0] - c01 * eph * y[1], -d1 * y[1] - c10 * std::conj(eph) * y[0]};
  };

  // Default start is the target eigenstate; the coupled-pair catalog entry
  // carries its own single-exciton amplitudes (mapped to the lab basis).
  Vec2 pair_init;
  if (!initial_lab && ctx.model().kind == ModelKind::ModelB) {
    pair_init << ctx.model().mu, ctx.model().nu;
    initial_lab = &pair_init;
  }
  std::array<cplx, 2> y{cplx{1.0, 0.0}, cplx{}};
  if (initial_lab) {
    y[0] = fp.frames[0].vec0.dot(*initial_lab);
    y[1] = fp.frames[0].vec1.dot(*initial_lab);
  }

  const auto store = [&](int i, const std::array<cplx, 2>& st, cplx z) {
    const auto iu = static_cast<std::size_t>(i);
    const auto j = static_cast<std::size_t>(2 * i);
    cplx p0 = st[0], p1 = st[1];
    if (s.berry) {
      p0 *= std::exp(i1 * fp.beta0[j]);
      p1 *= std::exp(i1 * fp.phi1[j]);
    }
    r.psi0[iu] = p0;
    r.psi1[iu] = p1;
    r.residual[iu] = s.cache.u[j] * z * (s.berry ? std::exp(i1 * fp.beta0[j]) : cplx(1.0, 0.0));
    Eigen::VectorXcd comp(2);
    comp << p0, p1;
    r.full_components.push_back(std::move(comp));
  };

  // Memory-integral diagnostic accumulated alongside (trapezoid of v psi0).
  cplx z{};
  cplx w = s.cache.v[0] * y[0];
  store(0, y, z);
  for (int i = 0; i < cfg.steps; ++i) {
    const int j = 2 * i;
    const auto k1 = deriv(j, y);
    const auto k2 = deriv(j + 1, {y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]});
    const auto k3 = deriv(j + 1, {y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]});
    const auto k4 = deriv(j + 2, {y[0] + h * k3[0], y[1] + h * k3[1]});
    y[0] += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
    y[1] += h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
    const cplx w_n = s.cache.v[static_cast<std::size_t>(j + 2)] * y[0];
    z += 0.5 * h * (w + w_n);
    w = w_n;
    store(i + 1, y, z);
  }
  return r;
}

inline TrajectoryResult solve(const KernelContext& ctx, const NoisePath* noise,
                              const SolverConfig& cfg) {
  switch (cfg.method) {
    case Method::VolterraQuadrature: return solve_volterra(ctx, noise, cfg);
    case Method::AuxiliaryODE: return solve_auxiliary(ctx, noise, cfg);
    case Method::ComponentOracle: return solve_components(ctx, noise, cfg);
  }
  throw ConfigError("unknown solver method");
}

/// Memory integral at grid index i (near-zero magnitude = adiabatic).
inline cplx adiabatic_residual(const TrajectoryResult& r, std::size_t i) {
  return r.residual.at(i);
}

}  // namespace qadia
