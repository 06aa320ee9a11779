// Independent reference computations used by the test suites. Everything here
// deliberately avoids the library's own code paths: closed-form solutions,
// finite differences, Kronecker-product constructions and explicit
// quadrature, so the implementations are checked against something else.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <functional>
#include <random>

#include "qadia/models.hpp"

namespace oracles {

using qadia::cplx;
using qadia::Mat2;
using qadia::Mat4;
using qadia::Vec2;

inline Mat2 pauli_x() {
  Mat2 m;
  m << 0, 1, 1, 0;
  return m;
}
inline Mat2 pauli_y() {
  Mat2 m;
  m << cplx(0, 0), cplx(0, -1), cplx(0, 1), cplx(0, 0);
  return m;
}
inline Mat2 pauli_z() {
  Mat2 m;
  m << 1, 0, 0, -1;
  return m;
}
inline Mat2 ident2() { return Mat2::Identity(); }

inline Mat4 kron(const Mat2& a, const Mat2& b) {
  Mat4 out;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
  return out;
}

/// Exact rotating-frame solution for the circularly driven two-level model
/// H = j0 (cos(Om t) sx + sin(Om t) sy + (om/2) sz), started in the upper
/// instantaneous eigenstate: the frame rotation exp(i Om t sz / 2) maps the
/// problem onto the static Hamiltonian j0 sx + Delta sz with
/// Delta = (j0 om - Om)/2, solvable in closed form.
struct RabiReference {
  double j0, Omega, omega;
  double k, delta, rabi;
  double sx_exp, sz_exp;  // Bloch components of the initial eigenstate

  RabiReference(double Omega_, double omega_, double j0_ = 1.0)
      : j0(j0_), Omega(Omega_), omega(omega_) {
    k = std::sqrt(omega * omega + 4.0);
    delta = 0.5 * (j0 * omega - Omega);
    rabi = std::sqrt(j0 * j0 + delta * delta);
    sx_exp = 2.0 / k;
    sz_exp = omega / k;
  }

  /// Amplitude on the tracked eigenstate, dynamical phase removed.
  cplx psi0(double t) const {
    const cplx overlap =
        cplx(std::cos(rabi * t), 0.0) -
        cplx(0.0, std::sin(rabi * t)) * (j0 * sx_exp + delta * sz_exp) / rabi;
    const double phase = 0.5 * j0 * k * t + 0.5 * Omega * t;
    return std::exp(cplx(0.0, phase)) * overlap;
  }

  double abs_psi0(double t) const { return std::abs(psi0(t)); }

  double min_abs_psi0() const {
    // |psi0|^2 = cos^2 + A^2 sin^2 with A the constant overlap factor.
    const double A = (j0 * sx_exp + delta * sz_exp) / rabi;
    return std::min(1.0, std::abs(A));
  }
};

/// Central-difference non-adiabatic coupling <Em(t)| d/dt |En(t)> from any
/// eigenvector path supplied as a callable t -> Vec2.
inline cplx fd_coupling(const std::function<Vec2(double)>& em,
                        const std::function<Vec2(double)>& en, double t,
                        double dt = 1e-6) {
  const Vec2 plus = en(t + dt);
  const Vec2 minus = en(t - dt);
  return em(t).dot((plus - minus) / (2.0 * dt));
}

/// Trapezoidal quadrature of a scalar function on [0, t] with n panels.
inline double trapz(const std::function<double(double)>& f, double t, int n = 20000) {
  double acc = 0.5 * (f(0.0) + f(t));
  for (int i = 1; i < n; ++i) acc += f(t * i / n);
  return acc * t / n;
}

/// Deterministic random field samples with a bounded-away-from-zero gap.
struct FieldSampler {
  std::mt19937_64 rng;
  std::uniform_real_distribution<double> dist{-2.0, 2.0};
  explicit FieldSampler(std::uint64_t seed) : rng(seed) {}
  qadia::FieldSample operator()() {
    for (;;) {
      qadia::FieldSample f;
      f.a = dist(rng);
      f.b = dist(rng);
      f.omega = dist(rng);
      const double k = std::sqrt(f.omega * f.omega + 4 * f.a * f.a + 4 * f.b * f.b);
      if (k > 0.1) return f;
    }
  }
};

}  // namespace oracles
