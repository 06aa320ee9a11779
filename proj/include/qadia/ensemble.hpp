#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <thread>
#include <vector>

#include "common.hpp"
#include "kernel.hpp"
#include "noise.hpp"
#include "solver.hpp"

namespace qadia {

/// Trajectory-averaged observables. The density matrix is accumulated in the
/// instantaneous eigenbasis from the per-realization coefficients
/// phi_m = psi_m e^{i theta_m} (the theta carry the realization's noise
/// phase, which is what dephases the off-diagonal elements).
struct EnsembleResult {
  std::vector<double> grid;
  std::vector<double> mean_abs_psi0, stderr_abs;
  std::vector<double> mean_pop0, stderr_pop;
  std::vector<Mat2> rho;
  std::vector<double> purity;
  int n_traj = 0;
  std::uint64_t base_seed = 0;
};

namespace detail {

struct EnsembleAccum {
  std::vector<double> abs_sum, abs2_sum, pop_sum, pop2_sum;
  std::vector<Mat2> rho_sum;
  long count = 0;

  void init(std::size_t n) {
    abs_sum.assign(n, 0.0);
    abs2_sum.assign(n, 0.0);
    pop_sum.assign(n, 0.0);
    pop2_sum.assign(n, 0.0);
    rho_sum.assign(n, Mat2::Zero());
    count = 0;
  }

  void add(const TrajectoryResult& tr) {
    const cplx i1(0.0, 1.0);
    for (std::size_t i = 0; i < tr.grid.size(); ++i) {
      const double a = std::abs(tr.psi0[i]);
      const double p = a * a;
      abs_sum[i] += a;
      abs2_sum[i] += a * a;
      pop_sum[i] += p;
      pop2_sum[i] += p * p;
      const cplx phi0 = tr.psi0[i] * std::exp(i1 * tr.theta0[i]);
      const cplx phi1 = tr.psi1[i] * std::exp(i1 * tr.theta1[i]);
      // projector of the normalized state; the raw coefficients carry the
      // integrator's O(h^2..h^4) norm drift, which is truncation, not physics
      const double nrm2 = std::norm(phi0) + std::norm(phi1);
      const double scale = nrm2 > 0.0 ? 1.0 / nrm2 : 0.0;
      Mat2& rho = rho_sum[i];
      rho(0, 0) += std::norm(phi0) * scale;
      rho(1, 1) += std::norm(phi1) * scale;
      rho(0, 1) += phi0 * std::conj(phi1) * scale;
      rho(1, 0) += phi1 * std::conj(phi0) * scale;
    }
    ++count;
  }

  void merge(const EnsembleAccum& o) {
    for (std::size_t i = 0; i < abs_sum.size(); ++i) {
      abs_sum[i] += o.abs_sum[i];
      abs2_sum[i] += o.abs2_sum[i];
      pop_sum[i] += o.pop_sum[i];
      pop2_sum[i] += o.pop2_sum[i];
      rho_sum[i] += o.rho_sum[i];
    }
    count += o.count;
  }
};

inline double sample_stderr(double sum, double sum2, long n) {
  if (n < 2) return 0.0;
  const double mean = sum / n;
  const double var = std::max(0.0, (sum2 - n * mean * mean) / (n - 1));
  return std::sqrt(var / n);
}

}  // namespace detail

/// Runs n_traj independent realizations with sub-seeds derived from
/// (base_seed, index) and reduces them into ensemble curves. The reduction is
/// chunked with a fixed chunk size and merged in chunk order, so the result
/// is identical for any thread count.
inline EnsembleResult run_ensemble(const ModelSpec& model, const NoiseSpec& noise,
                                   const SolverConfig& cfg, int n_traj,
                                   std::uint64_t base_seed, int n_threads = 0) {
  if (n_traj < 1) throw ConfigError("ensemble needs n_traj >= 1");
  noise.validate();
  const KernelContext ctx = KernelContext::build(model, cfg.grid());
  const std::vector<double> master = ctx.grid().master_grid();
  const std::size_t n_points = static_cast<std::size_t>(ctx.grid().n_full());

  constexpr int chunk_size = 64;
  const int n_chunks = (n_traj + chunk_size - 1) / chunk_size;
  std::vector<detail::EnsembleAccum> partials(static_cast<std::size_t>(n_chunks));

  const auto run_chunk = [&](int chunk) {
    auto& acc = partials[static_cast<std::size_t>(chunk)];
    acc.init(n_points);
    const int lo = chunk * chunk_size;
    const int hi = std::min(n_traj, lo + chunk_size);
    for (int idx = lo; idx < hi; ++idx) {
      const NoisePath path =
          noise.kind == NoiseKind::None
              ? NoisePath{}
              : sample_path(noise, master, derive_seed(base_seed, static_cast<std::uint64_t>(idx)));
      const NoisePath* pp = noise.kind == NoiseKind::None ? nullptr : &path;
      acc.add(solve(ctx, pp, cfg));
    }
  };

  int hw = n_threads > 0 ? n_threads : static_cast<int>(std::thread::hardware_concurrency());
  hw = std::max(1, std::min(hw, n_chunks));
  if (hw == 1) {
    for (int chunkidx = 0; chunkidx < n_chunks; ++chunkidx) run_chunk(chunkidx);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(hw));
    for (int w = 0; w < hw; ++w)
      pool.emplace_back([&] {
        for (int chunkidx = next.fetch_add(1); chunkidx < n_chunks;
             chunkidx = next.fetch_add(1))
          run_chunk(chunkidx);
      });
    for (auto& th : pool) th.join();
  }

  detail::EnsembleAccum total;
  total.init(n_points);
  for (const auto& partial : partials) total.merge(partial);

  EnsembleResult er;
  er.grid = ctx.grid().full_grid();
  er.n_traj = n_traj;
  er.base_seed = base_seed;
  er.mean_abs_psi0.resize(n_points);
  er.stderr_abs.resize(n_points);
  er.mean_pop0.resize(n_points);
  er.stderr_pop.resize(n_points);
  er.rho.resize(n_points);
  er.purity.resize(n_points);
  for (std::size_t i = 0; i < n_points; ++i) {
    er.mean_abs_psi0[i] = total.abs_sum[i] / n_traj;
    er.mean_pop0[i] = total.pop_sum[i] / n_traj;
    er.stderr_abs[i] = detail::sample_stderr(total.abs_sum[i], total.abs2_sum[i], n_traj);
    er.stderr_pop[i] = detail::sample_stderr(total.pop_sum[i], total.pop2_sum[i], n_traj);
    er.rho[i] = total.rho_sum[i] / static_cast<double>(n_traj);
    er.purity[i] = (er.rho[i] * er.rho[i]).trace().real();
  }
  return er;
}

/// Deterministic mean-dynamics shortcut: one Volterra predictor-corrector
/// solve with the noise-averaged (attenuated) kernel. The attenuation couples
/// both time arguments, so the memory integral is evaluated as a direct
/// trapezoidal sum over the history (O(steps^2)).
inline TrajectoryResult averaged_kernel_run(const ModelSpec& model, const NoiseSpec& noise,
                                            const SolverConfig& cfg) {
  if (noise.kind != NoiseKind::GaussianWhite && noise.kind != NoiseKind::None)
    throw UnsupportedError("averaged_kernel_run requires Gaussian white noise");
  const KernelContext ctx = KernelContext::build(model, cfg.grid());
  check_resolution(ctx, cfg);
  const double gamma = noise.kind == NoiseKind::None ? 0.0 : noise.gamma();
  const auto& fp = ctx.frames();
  const bool berry = !cfg.include_geometric_term;
  const auto cache = ctx.make_cache(nullptr, berry);
  const double h = cfg.grid().h();
  const int n_steps = cfg.steps;

  TrajectoryResult r;
  r.grid = cfg.grid().full_grid();
  const std::size_t n_points = r.grid.size();
  r.psi0.assign(n_points, cplx{});
  r.psi1.assign(n_points, cplx{});
  r.residual.assign(n_points, cplx{});
  r.theta0.assign(n_points, 0.0);
  r.theta1.assign(n_points, 0.0);
  for (std::size_t i = 0; i < n_points; ++i) {
    r.theta0[i] = cache.theta0[2 * i];
    r.theta1[i] = cache.theta1[2 * i];
  }

  std::vector<cplx> psi(n_points, cplx{});
  psi[0] = cplx{1.0, 0.0};
  const cplx i1(0.0, 1.0);

  // trapezoidal history sum for the attenuated kernel at full index i:
  //   base(i) = h [ 1/2 w_0 + sum_{j=1..i-1} w_j ],
  //   w_j = v_j psi_j exp(-(Gamma/2)(K2_i - K2_j)),
  // completed by the half-weighted endpoint term for the current psi_i.
  const auto base_sum = [&](int i, int upto) -> cplx {
    cplx acc{};
    const double k2_t = fp.int_k2[static_cast<std::size_t>(2 * i)];
    for (int j = 0; j <= upto; ++j) {
      const double att = std::exp(-0.5 * gamma * (k2_t - fp.int_k2[static_cast<std::size_t>(2 * j)]));
      const cplx w = cache.v[static_cast<std::size_t>(2 * j)] * psi[static_cast<std::size_t>(j)] * att;
      acc += (j == 0) ? 0.5 * w : w;
    }
    return h * acc;
  };

  const auto c00 = [&](int i) {
    return berry ? cplx{} : fp.frames[static_cast<std::size_t>(2 * i)].c00;
  };
  const auto restore = [&](int i) {
    return berry ? std::exp(i1 * fp.beta0[static_cast<std::size_t>(2 * i)]) : cplx(1.0, 0.0);
  };

  r.psi0[0] = psi[0];
  cplx memory_prev{};  // memory integral at step start
  for (int i = 0; i < n_steps; ++i) {
    const cplx f = -c00(i) * psi[static_cast<std::size_t>(i)] - memory_prev;
    const cplx psi_p = psi[static_cast<std::size_t>(i)] + h * f;
    const cplx base_next = base_sum(i + 1, i);
    const cplx u_next = cache.u[static_cast<std::size_t>(2 * (i + 1))];
    const cplx mem_p = u_next * (base_next + 0.5 * h * cache.v[static_cast<std::size_t>(2 * (i + 1))] * psi_p);
    const cplx f_p = -c00(i + 1) * psi_p - mem_p;
    psi[static_cast<std::size_t>(i + 1)] = psi[static_cast<std::size_t>(i)] + 0.5 * h * (f + f_p);
    const cplx memory =
        u_next * (base_next +
                  0.5 * h * cache.v[static_cast<std::size_t>(2 * (i + 1))] * psi[static_cast<std::size_t>(i + 1)]);
    memory_prev = memory;
    r.psi0[static_cast<std::size_t>(i + 1)] = psi[static_cast<std::size_t>(i + 1)] * restore(i + 1);
    r.residual[static_cast<std::size_t>(i + 1)] = memory * restore(i + 1);
  }
  return r;
}

/// Scalar figure-of-merit summary of one curve.
struct Metrics {
  double min_abs_psi0 = 0.0;
  double final_abs_psi0 = 0.0;
  double final_fidelity = 0.0;  // |psi0(t_end)|^2
  double time_of_min = 0.0;
};

inline Metrics metrics(const std::vector<double>& grid, const std::vector<double>& abs_psi0) {
  Metrics m;
  m.min_abs_psi0 = abs_psi0.front();
  m.time_of_min = grid.front();
  for (std::size_t i = 0; i < abs_psi0.size(); ++i) {
    if (abs_psi0[i] < m.min_abs_psi0) {
      m.min_abs_psi0 = abs_psi0[i];
      m.time_of_min = grid[i];
    }
  }
  m.final_abs_psi0 = abs_psi0.back();
  m.final_fidelity = sqr(abs_psi0.back());
  return m;
}

inline Metrics metrics(const TrajectoryResult& r) {
  std::vector<double> a(r.psi0.size());
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = std::abs(r.psi0[i]);
  return metrics(r.grid, a);
}

inline Metrics metrics(const EnsembleResult& r) { return metrics(r.grid, r.mean_abs_psi0); }

}  // namespace qadia
