#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "common.hpp"
#include "models.hpp"
#include "noise.hpp"

namespace qadia {

/// Relative spectral tolerance below which the instantaneous eigenproblem is
/// treated as degenerate (couplings diverge there).
inline constexpr double gap_tol_rel = 1e-9;

/// Instantaneous eigenstructure of the canonical two-level Hamiltonian
///   H = (j0 + c) (a sx + b sy + (omega/2) sz).
///
/// Parametrization (branch 0 = upper energy by convention):
///   |E0> =  e^{-i beta} cos(alpha) |up> + sin(alpha) |down>,
///   |E1> = -e^{-i beta} sin(alpha) |up> + cos(alpha) |down>,
/// with k = +sqrt(omega^2 + 4a^2 + 4b^2), beta = atan2(b, a),
/// alpha = arccos[(k+omega)/sqrt(2k^2+2k omega)], energies (j0+c)(+-k/2).
///
/// c00, c01, c10, c11 are the frame derivatives <Em|d/dt En>; the diagonal
/// ones are purely imaginary in this gauge. Multiplicative noise rescales
/// e0/e1 but touches neither the angles nor the couplings.
struct EigenFrame {
  double t = 0.0;
  double k = 0.0;
  double alpha = 0.0;  // canonical (branch-0-upper) mixing angle
  double beta = 0.0;   // azimuthal angle of the transverse field
  double e0 = 0.0;     // target-branch energy (noise included)
  double e1 = 0.0;
  cplx c00{}, c01{}, c10{}, c11{};
  Vec2 vec0 = Vec2::Zero();
  Vec2 vec1 = Vec2::Zero();

  /// Same frame with the branch labels exchanged (target = former branch 1).
  EigenFrame swapped() const {
    EigenFrame s = *this;
    std::swap(s.e0, s.e1);
    std::swap(s.c00, s.c11);
    std::swap(s.c01, s.c10);
    std::swap(s.vec0, s.vec1);
    return s;
  }
};

/// Eigenvectors reconstructed from the (alpha, beta) parametrization.
inline std::pair<Vec2, Vec2> frame_vectors(double alpha, double beta) {
  const cplx ph = std::exp(cplx(0.0, -beta));
  Vec2 v0, v1;
  v0 << ph * std::cos(alpha), cplx(std::sin(alpha), 0.0);
  v1 << -ph * std::sin(alpha), cplx(std::cos(alpha), 0.0);
  return {v0, v1};
}

/// Closed-form frame from the fields and their rates. Throws GapClosureError
/// when the spectrum is degenerate (all fields vanishing).
inline EigenFrame frame_analytic(const FieldSample& f, const FieldRates& r, double j0,
                                 double noise_value = 0.0, Branch target = Branch::E0) {
  EigenFrame fr;
  fr.t = f.t;
  const double r2 = sqr(f.a) + sqr(f.b);
  const double k = std::sqrt(sqr(f.omega) + 4.0 * r2);
  if (k < gap_tol_rel) throw GapClosureError("degenerate two-level spectrum (k ~ 0)");
  fr.k = k;

  const double cos_a = std::sqrt(std::max(0.0, (k + f.omega) / (2.0 * k)));
  const double sin_a = std::sqrt(std::max(0.0, (k - f.omega) / (2.0 * k)));
  fr.alpha = std::atan2(sin_a, cos_a);
  fr.beta = (r2 > 0.0) ? std::atan2(f.b, f.a) : 0.0;

  const double scale = j0 + noise_value;
  fr.e0 = 0.5 * scale * k;
  fr.e1 = -0.5 * scale * k;

  // Angle rates: 2 alpha = atan2(2 rho, omega) with rho = sqrt(a^2+b^2).
  const double rho = std::sqrt(r2);
  const double tiny = 1e-300;
  const double rho_dot = (rho > tiny) ? (f.a * r.da + f.b * r.db) / rho
                                      : std::hypot(r.da, r.db);
  const double beta_dot = (r2 > tiny) ? (f.a * r.db - f.b * r.da) / r2 : 0.0;
  const double alpha_dot = (rho_dot * f.omega - rho * r.domega) / sqr(k);

  const cplx i1(0.0, 1.0);
  fr.c00 = -i1 * beta_dot * sqr(cos_a);
  fr.c11 = -i1 * beta_dot * sqr(sin_a);
  fr.c01 = i1 * beta_dot * sin_a * cos_a - alpha_dot;
  fr.c10 = i1 * beta_dot * sin_a * cos_a + alpha_dot;

  auto [v0, v1] = frame_vectors(fr.alpha, fr.beta);
  fr.vec0 = v0;
  fr.vec1 = v1;
  return (target == Branch::E0) ? fr : fr.swapped();
}

inline EigenFrame frame_analytic(const ModelSpec& m, double t, double noise_value = 0.0) {
  return frame_analytic(eval_fields(m, t), eval_field_rates(m, t), m.j0, noise_value,
                        m.initial_branch);
}

/// Numerically diagonalized frame; the generic oracle for frame_analytic.
/// Eigenpairs are sorted by eigenvalue descending; each vector is rotated so
/// its largest-magnitude component is real positive, then phase-aligned to
/// `previous` when given (overlap made real non-negative). Couplings are not
/// filled (no Hdot information here).
inline EigenFrame frame_numeric(const Mat2& H, double j0,
                                const EigenFrame* previous = nullptr,
                                double t = 0.0) {
  Eigen::SelfAdjointEigenSolver<Mat2> es(H);
  if (es.info() != Eigen::Success) throw std::runtime_error("eigensolver failed");
  const double e_low = es.eigenvalues()(0);
  const double e_high = es.eigenvalues()(1);
  if (e_high - e_low < gap_tol_rel * j0)
    throw GapClosureError("numeric frame: gap below tolerance");

  Vec2 v0 = es.eigenvectors().col(1);
  Vec2 v1 = es.eigenvectors().col(0);
  const auto fix_gauge = [](Vec2& v) {
    const int idx = std::abs(v(0)) >= std::abs(v(1)) ? 0 : 1;
    const cplx z = v(idx);
    if (std::abs(z) > 0.0) v *= std::conj(z) / std::abs(z);
  };
  fix_gauge(v0);
  fix_gauge(v1);
  if (previous) {
    const auto align = [](const Vec2& prev, Vec2& v) {
      const cplx ov = prev.dot(v);  // <prev|v>
      if (std::abs(ov) > 1e-14) v *= std::conj(ov) / std::abs(ov);
    };
    align(previous->vec0, v0);
    align(previous->vec1, v1);
  }

  EigenFrame fr;
  fr.t = t;
  fr.e0 = e_high;
  fr.e1 = e_low;
  fr.k = (e_high - e_low) / j0;
  fr.vec0 = v0;
  fr.vec1 = v1;
  // Read (alpha, beta) off a copy rotated into the canonical gauge
  // (down component real positive).
  fr.alpha = std::atan2(std::abs(v0(1)), std::abs(v0(0)));
  Vec2 canon = v0;
  if (std::abs(canon(1)) > 1e-14) canon *= std::conj(canon(1)) / std::abs(canon(1));
  fr.beta = (std::abs(canon(0)) > 1e-14) ? -std::arg(canon(0)) : 0.0;
  return fr;
}

/// Off-diagonal non-adiabatic coupling <Em|d/dt En> = <Em|Hdot|En>/(En - Em).
template <typename MatT, typename VecT>
cplx coupling_offdiag(const MatT& hdot, const VecT& em, const VecT& en, double e_m,
                      double e_n, double gap_tol = 1e-12) {
  const double gap = e_n - e_m;
  if (std::abs(gap) < gap_tol)
    throw GapClosureError("coupling: vanishing gap between branches");
  return em.dot(hdot * en) / gap;
}

/// Dynamical phases theta_n(t) = -int_0^t E_n and the geometric phase
/// beta0(t) = i int_0^t <E0|d/dt E0>; all vanish at t = 0.
struct PhaseRecord {
  double t = 0.0;
  double theta0 = 0.0;
  double theta1 = 0.0;
  double beta0 = 0.0;
};

/// Immutable frame path on the master grid of a run, with the cumulative
/// integrals every consumer needs. Shared (read-only) across trajectories;
/// the noise-dependent pieces are accumulated per trajectory elsewhere.
struct FramePath {
  ModelSpec model;
  SolverGrid grid;
  std::vector<EigenFrame> frames;   // n_master entries
  std::vector<double> int_e0;       // int_0^t e0 (noise-free)
  std::vector<double> int_e1;
  std::vector<double> beta0;        // i int <E0|dE0> (real in this gauge)
  std::vector<double> phi1;         // -Im int <E1|dE1>
  std::vector<double> int_k;        // int k
  std::vector<double> int_k2;       // accumulated k_mid^2 * delta (dephasing)
  std::vector<double> k;            // k per master point (for noise weights)

  double j0() const { return model.j0; }
  int n() const { return static_cast<int>(frames.size()); }

  static FramePath build(const ModelSpec& model, const SolverGrid& grid) {
    model.validate();
    grid.validate();
    FramePath p;
    p.model = model;
    p.grid = grid;
    const int n = grid.n_master();
    p.frames.reserve(n);
    for (int j = 0; j < n; ++j)
      p.frames.push_back(frame_analytic(model, grid.master_time(j)));
    p.recompute_integrals();
    return p;
  }

  /// Trapezoidal cumulative integrals over the master grid. Re-run after any
  /// in-place modification of the frames (e.g. a gauge twist).
  void recompute_integrals() {
    const int n = static_cast<int>(frames.size());
    const double d = grid.delta();
    int_e0.assign(n, 0.0);
    int_e1.assign(n, 0.0);
    beta0.assign(n, 0.0);
    phi1.assign(n, 0.0);
    int_k.assign(n, 0.0);
    int_k2.assign(n, 0.0);
    k.assign(n, 0.0);
    for (int j = 0; j < n; ++j) k[static_cast<std::size_t>(j)] = frames[j].k;
    for (int j = 1; j < n; ++j) {
      const EigenFrame& a = frames[j - 1];
      const EigenFrame& b = frames[j];
      int_e0[j] = int_e0[j - 1] + 0.5 * d * (a.e0 + b.e0);
      int_e1[j] = int_e1[j - 1] + 0.5 * d * (a.e1 + b.e1);
      // i int c00 with c00 purely imaginary: beta0 accumulates -Im c00.
      beta0[j] = beta0[j - 1] - 0.5 * d * (a.c00.imag() + b.c00.imag());
      phi1[j] = phi1[j - 1] - 0.5 * d * (a.c11.imag() + b.c11.imag());
      int_k[j] = int_k[j - 1] + 0.5 * d * (a.k + b.k);
      int_k2[j] = int_k2[j - 1] + d * sqr(0.5 * (a.k + b.k));
    }
  }

  /// Smooth re-gauging |En> -> e^{i gamma_n(t)} |En>. Couplings pick up the
  /// relative phases and the diagonal terms shift by i gamma_n'.
  void apply_gauge_twist(const std::function<double(double)>& gamma0,
                         const std::function<double(double)>& dgamma0,
                         const std::function<double(double)>& gamma1,
                         const std::function<double(double)>& dgamma1) {
    const cplx i1(0.0, 1.0);
    for (auto& fr : frames) {
      const double g0 = gamma0(fr.t), g1 = gamma1(fr.t);
      fr.c00 += i1 * dgamma0(fr.t);
      fr.c11 += i1 * dgamma1(fr.t);
      fr.c01 *= std::exp(i1 * (g1 - g0));
      fr.c10 *= std::exp(i1 * (g0 - g1));
      fr.vec0 *= std::exp(i1 * g0);
      fr.vec1 *= std::exp(i1 * g1);
    }
    recompute_integrals();
  }
};

/// Per-level accumulation sum (e_n/j0)_mid dPhi along the path; the noise
/// contribution to int_0^t E_n when the strength is shifted by c(t).
inline std::vector<double> noise_energy_accumulation(const FramePath& path,
                                                     const NoisePath& np, int branch) {
  if (np.size() != path.frames.size())
    throw ConfigError("noise path and frame path grids differ");
  std::vector<double> acc(np.size(), 0.0);
  const double inv_j0 = 1.0 / path.j0();
  for (std::size_t j = 1; j < np.size(); ++j) {
    const double ea = branch == 0 ? path.frames[j - 1].e0 : path.frames[j - 1].e1;
    const double eb = branch == 0 ? path.frames[j].e0 : path.frames[j].e1;
    acc[j] = acc[j - 1] + 0.5 * (ea + eb) * inv_j0 * (np.phi[j] - np.phi[j - 1]);
  }
  return acc;
}

/// Phase records along the path; theta_n includes the noise-shifted energies
/// when a NoisePath (on the same grid) is attached.
inline std::vector<PhaseRecord> accumulate_phases(const FramePath& path,
                                                  const NoisePath* np = nullptr) {
  std::vector<double> n0, n1;
  if (np) {
    n0 = noise_energy_accumulation(path, *np, 0);
    n1 = noise_energy_accumulation(path, *np, 1);
  }
  std::vector<PhaseRecord> out(path.frames.size());
  for (std::size_t j = 0; j < path.frames.size(); ++j) {
    out[j].t = path.frames[j].t;
    out[j].theta0 = -(path.int_e0[j] + (np ? n0[j] : 0.0));
    out[j].theta1 = -(path.int_e1[j] + (np ? n1[j] : 0.0));
    out[j].beta0 = path.beta0[j];
  }
  return out;
}

}  // namespace qadia
