#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "common.hpp"
#include "noise.hpp"
#include "solver.hpp"

namespace qadia {

using MatX = Eigen::MatrixXcd;
using VecX = Eigen::VectorXcd;
using RowX = Eigen::RowVectorXcd;

/// Numerically built frame path for an arbitrary finite-level Hermitian H(t).
/// Levels are sorted by energy descending (level 0 = target, consistent with
/// the two-level convention). Eigenvectors are gauge-fixed (largest component
/// real positive at t = 0, then phase-aligned point to point) so the coupling
/// matrix <Em|dEn> is smooth; off-diagonal entries come from Hdot, diagonal
/// ones from central differences of the aligned vectors.
struct NLevelPath {
  SolverGrid grid;
  double j0 = 1.0;
  int dim = 0;
  std::vector<Eigen::VectorXd> energies;
  std::vector<MatX> vectors;    // columns are |En>
  std::vector<MatX> couplings;  // (m,n) = <Em|dEn>
  std::vector<Eigen::VectorXd> int_e;

  int n() const { return static_cast<int>(energies.size()); }

  static NLevelPath build(const std::function<MatX(double)>& H,
                          const std::function<MatX(double)>& Hdot, double j0,
                          const SolverGrid& grid) {
    grid.validate();
    NLevelPath p;
    p.grid = grid;
    p.j0 = j0;
    const int n = grid.n_master();
    const double d = grid.delta();

    for (int j = 0; j < n; ++j) {
      const double t = grid.master_time(j);
      const MatX h = H(t);
      if (j == 0) p.dim = static_cast<int>(h.rows());
      Eigen::SelfAdjointEigenSolver<MatX> es(h);
      if (es.info() != Eigen::Success) throw std::runtime_error("eigensolver failed");
      Eigen::VectorXd e(p.dim);
      MatX v(p.dim, p.dim);
      for (int m = 0; m < p.dim; ++m) {  // descending
        e(m) = es.eigenvalues()(p.dim - 1 - m);
        v.col(m) = es.eigenvectors().col(p.dim - 1 - m);
      }
      for (int m = 0; m + 1 < p.dim; ++m)
        if (e(m) - e(m + 1) < gap_tol_rel * j0)
          throw GapClosureError("n-level frame: gap below tolerance");
      for (int m = 0; m < p.dim; ++m) {
        VecX col = v.col(m);
        if (j == 0) {
          int idx = 0;
          for (int q = 1; q < p.dim; ++q)
            if (std::abs(col(q)) > std::abs(col(idx))) idx = q;
          const cplx z = col(idx);
          if (std::abs(z) > 0.0) col *= std::conj(z) / std::abs(z);
        } else {
          const cplx ov = p.vectors.back().col(m).dot(col);
          if (std::abs(ov) > 1e-14) col *= std::conj(ov) / std::abs(ov);
        }
        v.col(m) = col;
      }
      p.energies.push_back(std::move(e));
      p.vectors.push_back(std::move(v));
    }

    // Couplings: <Em|Hdot|En>/(En-Em) off the diagonal, finite differences
    // of the aligned vectors on it (one-sided at the ends).
    for (int j = 0; j < n; ++j) {
      const double t = grid.master_time(j);
      const MatX hd = Hdot(t);
      MatX c(p.dim, p.dim);
      for (int m = 0; m < p.dim; ++m) {
        for (int nn = 0; nn < p.dim; ++nn) {
          if (m == nn) continue;
          c(m, nn) = p.vectors[static_cast<std::size_t>(j)].col(m).dot(
                         hd * p.vectors[static_cast<std::size_t>(j)].col(nn)) /
                     (p.energies[static_cast<std::size_t>(j)](nn) -
                      p.energies[static_cast<std::size_t>(j)](m));
        }
      }
      for (int m = 0; m < p.dim; ++m) {
        VecX dv;
        if (j == 0)
          dv = (p.vectors[1].col(m) - p.vectors[0].col(m)) / d;
        else if (j == n - 1)
          dv = (p.vectors[static_cast<std::size_t>(j)].col(m) -
                p.vectors[static_cast<std::size_t>(j - 1)].col(m)) / d;
        else
          dv = (p.vectors[static_cast<std::size_t>(j + 1)].col(m) -
                p.vectors[static_cast<std::size_t>(j - 1)].col(m)) / (2.0 * d);
        c(m, m) = p.vectors[static_cast<std::size_t>(j)].col(m).dot(dv);
      }
      p.couplings.push_back(std::move(c));
    }

    p.int_e.assign(static_cast<std::size_t>(n), Eigen::VectorXd::Zero(p.dim));
    for (int j = 1; j < n; ++j)
      p.int_e[static_cast<std::size_t>(j)] =
          p.int_e[static_cast<std::size_t>(j - 1)] +
          0.5 * d * (p.energies[static_cast<std::size_t>(j - 1)] +
                     p.energies[static_cast<std::size_t>(j)]);
    return p;
  }
};

/// Per-trajectory tables for the generic kernel g(t,s) = R(t) G(t,s) W(s).
/// G is the time-ordered exponential of -i D over the non-target block,
/// accumulated as per-step unitaries (D is Hermitian): with
/// U(t) = prod exp(-i D_mid delta), G(t,s) = U(t) U(s)^dagger and the kernel
/// separates into cached vectors rtilde = R U and wtilde = U^dag W.
struct NLevelCache {
  std::vector<Eigen::VectorXd> theta;  // per level, noise included
  std::vector<RowX> rtilde;
  std::vector<VecX> wtilde;
  std::vector<MatX> u_prop;     // cumulative ordered product
  std::vector<MatX> step_prop;  // exp(-i D_mid delta) per master step
  const NoisePath* path = nullptr;
  std::uint64_t seed = 0;
};

inline NLevelCache make_nlevel_cache(const NLevelPath& p, const NoisePath* np = nullptr) {
  const int n = p.n();
  const int q = p.dim - 1;  // non-target block size
  if (np && static_cast<int>(np->size()) != n)
    throw ConfigError("noise path grid does not match the n-level path");

  NLevelCache c;
  c.path = np;
  c.seed = np ? np->seed : 0;
  const cplx i1(0.0, 1.0);

  // theta_n = -(int E_n + noise accumulation with weight E_n/j0)
  c.theta.assign(static_cast<std::size_t>(n), Eigen::VectorXd::Zero(p.dim));
  for (int j = 0; j < n; ++j) {
    auto& th = c.theta[static_cast<std::size_t>(j)];
    th = -p.int_e[static_cast<std::size_t>(j)];
    if (np && j > 0) {
      const double dphi = np->phi[static_cast<std::size_t>(j)] -
                          np->phi[static_cast<std::size_t>(j - 1)];
      th = c.theta[static_cast<std::size_t>(j - 1)] -
           (p.int_e[static_cast<std::size_t>(j)] - p.int_e[static_cast<std::size_t>(j - 1)]) -
           0.5 * (p.energies[static_cast<std::size_t>(j - 1)] +
                  p.energies[static_cast<std::size_t>(j)]) * (dphi / p.j0);
    }
  }

  const auto d_block = [&](int j) -> MatX {
    MatX dmat(q, q);
    const auto ju = static_cast<std::size_t>(j);
    for (int m = 1; m < p.dim; ++m)
      for (int nn = 1; nn < p.dim; ++nn)
        dmat(m - 1, nn - 1) = -i1 * p.couplings[ju](m, nn) *
                              std::exp(i1 * (c.theta[ju](nn) - c.theta[ju](m)));
    return dmat;
  };

  c.u_prop.resize(static_cast<std::size_t>(n));
  c.step_prop.resize(static_cast<std::size_t>(n - 1));
  c.u_prop[0] = MatX::Identity(q, q);
  const double d = p.grid.delta();
  for (int j = 0; j + 1 < n; ++j) {
    // exp(-i D delta) with D Hermitian via its spectral decomposition
    const MatX dmid = 0.5 * (d_block(j) + d_block(j + 1));
    Eigen::SelfAdjointEigenSolver<MatX> esd(dmid);
    MatX expd = MatX::Zero(q, q);
    for (int m = 0; m < q; ++m)
      expd += std::exp(-i1 * esd.eigenvalues()(m) * d) * esd.eigenvectors().col(m) *
              esd.eigenvectors().col(m).adjoint();
    c.step_prop[static_cast<std::size_t>(j)] = expd;
    c.u_prop[static_cast<std::size_t>(j + 1)] = expd * c.u_prop[static_cast<std::size_t>(j)];
  }

  c.rtilde.resize(static_cast<std::size_t>(n));
  c.wtilde.resize(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    RowX r(q);
    for (int m = 1; m < p.dim; ++m)
      r(m - 1) = -i1 * p.couplings[ju](0, m) *
                 std::exp(i1 * (c.theta[ju](m) - c.theta[ju](0)));
    c.rtilde[ju] = r * c.u_prop[ju];
    c.wtilde[ju] = c.u_prop[ju].adjoint() * r.adjoint();
  }
  return c;
}

/// Literal time-ordered product of the per-step propagators over [s, t].
inline MatX ordered_propagator(const NLevelCache& c, int j_s, int j_t) {
  MatX g = MatX::Identity(c.u_prop[0].rows(), c.u_prop[0].cols());
  for (int j = j_s; j < j_t; ++j) g = c.step_prop[static_cast<std::size_t>(j)] * g;
  return g;
}

/// Generic kernel R(t) G(t,s) W(s) at master-grid indices.
inline cplx kernel_generic(const NLevelPath& /*p*/, const NLevelCache& c, int j_t,
                           int j_s) {
  return (c.rtilde[static_cast<std::size_t>(j_t)] *
          c.wtilde[static_cast<std::size_t>(j_s)])(0);
}

/// Full component system in the instantaneous eigenbasis (generic oracle).
/// `initial_eigen`, when given, is the component vector at t = 0.
inline TrajectoryResult solve_components_n(const NLevelPath& p, const NLevelCache& c,
                                           const VecX* initial_eigen = nullptr) {
  const int n_steps = p.grid.steps;
  const double h = p.grid.h();
  const cplx i1(0.0, 1.0);
  TrajectoryResult r;
  r.grid = p.grid.full_grid();
  r.noise_seed = c.seed;

  const auto deriv = [&](int j, const VecX& y) -> VecX {
    const auto ju = static_cast<std::size_t>(j);
    VecX dy = VecX::Zero(p.dim);
    for (int m = 0; m < p.dim; ++m)
      for (int nn = 0; nn < p.dim; ++nn)
        dy(m) -= p.couplings[ju](m, nn) *
                 std::exp(i1 * (c.theta[ju](nn) - c.theta[ju](m))) * y(nn);
    return dy;
  };

  VecX y = VecX::Zero(p.dim);
  y(0) = 1.0;
  if (initial_eigen) y = *initial_eigen;

  VecX z = VecX::Zero(p.dim - 1);
  VecX w = c.wtilde[0] * y(0);
  const auto store = [&](int i, const VecX& st) {
    r.psi0.push_back(st(0));
    r.psi1.push_back(p.dim == 2 ? st(1) : cplx{});
    r.residual.push_back((c.rtilde[static_cast<std::size_t>(2 * i)] * z)(0));
    r.theta0.push_back(c.theta[static_cast<std::size_t>(2 * i)](0));
    r.theta1.push_back(c.theta[static_cast<std::size_t>(2 * i)](1));
    r.full_components.push_back(st);
  };
  store(0, y);

  for (int i = 0; i < n_steps; ++i) {
    const int j = 2 * i;
    const VecX k1 = deriv(j, y);
    const VecX k2 = deriv(j + 1, y + 0.5 * h * k1);
    const VecX k3 = deriv(j + 1, y + 0.5 * h * k2);
    const VecX k4 = deriv(j + 2, y + h * k3);
    y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    const VecX w_n = c.wtilde[static_cast<std::size_t>(j + 2)] * y(0);
    z += 0.5 * h * (w + w_n);
    w = w_n;
    store(i + 1, y);
  }
  return r;
}

/// One-component solve through the separable generic kernel: with the vector
/// accumulator z(t) = int_0^t wtilde(s) psi0(s) ds,
///   d/dt psi0 = -<E0|dE0> psi0 - rtilde(t) z,   d/dt z = wtilde(t) psi0.
inline TrajectoryResult solve_auxiliary_n(const NLevelPath& p, const NLevelCache& c) {
  const int n_steps = p.grid.steps;
  const double h = p.grid.h();
  TrajectoryResult r;
  r.grid = p.grid.full_grid();
  r.noise_seed = c.seed;

  struct State {
    cplx psi;
    VecX z;
  };
  const auto deriv = [&](int j, const State& y) -> State {
    const auto ju = static_cast<std::size_t>(j);
    return {-p.couplings[ju](0, 0) * y.psi - (c.rtilde[ju] * y.z)(0),
            c.wtilde[ju] * y.psi};
  };

  State y{cplx{1.0, 0.0}, VecX::Zero(p.dim - 1)};
  const auto store = [&](int i, const State& st) {
    r.psi0.push_back(st.psi);
    r.psi1.push_back(cplx{});
    r.residual.push_back((c.rtilde[static_cast<std::size_t>(2 * i)] * st.z)(0));
    r.theta0.push_back(c.theta[static_cast<std::size_t>(2 * i)](0));
    r.theta1.push_back(c.theta[static_cast<std::size_t>(2 * i)](1));
  };
  store(0, y);
  for (int i = 0; i < n_steps; ++i) {
    const int j = 2 * i;
    const State k1 = deriv(j, y);
    const State k2 = deriv(j + 1, {y.psi + 0.5 * h * k1.psi, y.z + 0.5 * h * k1.z});
    const State k3 = deriv(j + 1, {y.psi + 0.5 * h * k2.psi, y.z + 0.5 * h * k2.z});
    const State k4 = deriv(j + 2, {y.psi + h * k3.psi, y.z + h * k3.z});
    y.psi += h / 6.0 * (k1.psi + 2.0 * k2.psi + 2.0 * k3.psi + k4.psi);
    y.z += h / 6.0 * (k1.z + 2.0 * k2.z + 2.0 * k3.z + k4.z);
    store(i + 1, y);
  }
  return r;
}

}  // namespace qadia
