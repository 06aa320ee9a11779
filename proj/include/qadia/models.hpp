#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "common.hpp"

namespace qadia {

using Mat2 = Eigen::Matrix2cd;
using Vec2 = Eigen::Vector2cd;
using Mat4 = Eigen::Matrix4cd;
using Vec4 = Eigen::Vector4cd;

enum class ModelKind { GenericTLS, LinearSweep, ModelA, ModelB };
enum class Branch { E0, E1 };

inline const char* model_name(ModelKind k) {
  switch (k) {
    case ModelKind::GenericTLS: return "generic_tls";
    case ModelKind::LinearSweep: return "linear_sweep";
    case ModelKind::ModelA: return "model_a";
    case ModelKind::ModelB: return "model_b";
  }
  return "?";
}

/// Field coefficients of the canonical two-level form
///   H = scale * (a sx + b sy + (omega/2) sz),
/// with a, b the transverse and omega the longitudinal (dimensionless) fields.
struct FieldSample {
  double a = 0.0;
  double b = 0.0;
  double omega = 0.0;
  double t = 0.0;
};

/// Time derivatives of the field coefficients at a given instant.
struct FieldRates {
  double da = 0.0;
  double db = 0.0;
  double domega = 0.0;
};

/// Catalog entry for a time-dependent two-level Hamiltonian. All energies are
/// multiples of j0 and times multiples of 1/j0 (hbar = 1).
struct ModelSpec {
  ModelKind kind = ModelKind::GenericTLS;
  double j0 = 1.0;            // overall energy scale
  double passage_time = 0.0;  // T; required by LinearSweep and ModelB
  double omega_drive = 0.0;   // Omega; rotating transverse field (ModelA)
  double omega_z = 0.0;       // omega; longitudinal field
  double a0 = 0.0;            // static transverse x field (GenericTLS)
  double b0 = 0.0;            // static transverse y field (GenericTLS)
  Branch initial_branch = Branch::E0;
  cplx mu{1.0, 0.0};          // single-exciton initial amplitudes (ModelB);
  cplx nu{0.0, 0.0};          // honored by the full-component oracle only

  static ModelSpec generic_tls(double a, double b, double omega, double j0 = 1.0) {
    ModelSpec m;
    m.kind = ModelKind::GenericTLS;
    m.a0 = a;
    m.b0 = b;
    m.omega_z = omega;
    m.j0 = j0;
    return m;
  }
  static ModelSpec linear_sweep(double T, double j0 = 1.0) {
    ModelSpec m;
    m.kind = ModelKind::LinearSweep;
    m.passage_time = T;
    m.j0 = j0;
    return m;
  }
  static ModelSpec model_a(double Omega, double omega, double j0 = 1.0) {
    ModelSpec m;
    m.kind = ModelKind::ModelA;
    m.omega_drive = Omega;
    m.omega_z = omega;
    m.j0 = j0;
    return m;
  }
  static ModelSpec model_b(double T, double j0 = 1.0, cplx mu = {1.0, 0.0},
                           cplx nu = {0.0, 0.0}) {
    ModelSpec m;
    m.kind = ModelKind::ModelB;
    m.passage_time = T;
    m.j0 = j0;
    m.mu = mu;
    m.nu = nu;
    return m;
  }

  bool time_bounded() const {
    return kind == ModelKind::LinearSweep || kind == ModelKind::ModelB;
  }

  void validate() const {
    if (!(j0 > 0.0)) throw ConfigError("model j0 must be positive");
    if (time_bounded() && !(passage_time > 0.0))
      throw ConfigError(std::string(model_name(kind)) + " requires passage_time > 0");
    if (kind == ModelKind::ModelB) {
      const double n2 = std::norm(mu) + std::norm(nu);
      if (std::abs(n2 - 1.0) > 1e-12)
        throw ConfigError("model_b initial amplitudes must satisfy |mu|^2+|nu|^2=1");
    }
  }

  /// Upper bound of k = sqrt(omega^2 + 4a^2 + 4b^2) over [0, t_end].
  double k_max(double /*t_end*/) const {
    switch (kind) {
      case ModelKind::GenericTLS:
        return std::sqrt(sqr(omega_z) + 4.0 * sqr(a0) + 4.0 * sqr(b0));
      case ModelKind::LinearSweep:
      case ModelKind::ModelB:
        return 2.0;  // endpoints of the sweep
      case ModelKind::ModelA:
        return std::sqrt(sqr(omega_z) + 4.0);
    }
    return 0.0;
  }
};

/// Catalog fields at time t. Sweep models are defined on [0, T] only.
inline FieldSample eval_fields(const ModelSpec& m, double t) {
  FieldSample f;
  f.t = t;
  switch (m.kind) {
    case ModelKind::GenericTLS:
      f.a = m.a0;
      f.b = m.b0;
      f.omega = m.omega_z;
      break;
    case ModelKind::LinearSweep:
    case ModelKind::ModelB: {
      const double T = m.passage_time;
      const double slack = 1e-9 * T;
      if (t < -slack || t > T + slack)
        throw std::domain_error("sweep model evaluated outside [0, T]");
      const double tau = std::min(1.0, std::max(0.0, t / T));
      f.a = tau;
      f.b = 0.0;
      f.omega = 2.0 * (1.0 - tau);
      break;
    }
    case ModelKind::ModelA:
      f.a = std::cos(m.omega_drive * t);
      f.b = std::sin(m.omega_drive * t);
      f.omega = m.omega_z;
      break;
  }
  return f;
}

inline FieldRates eval_field_rates(const ModelSpec& m, double t) {
  FieldRates r;
  switch (m.kind) {
    case ModelKind::GenericTLS:
      break;
    case ModelKind::LinearSweep:
    case ModelKind::ModelB:
      r.da = 1.0 / m.passage_time;
      r.db = 0.0;
      r.domega = -2.0 / m.passage_time;
      break;
    case ModelKind::ModelA:
      r.da = -m.omega_drive * std::sin(m.omega_drive * t);
      r.db = m.omega_drive * std::cos(m.omega_drive * t);
      r.domega = 0.0;
      break;
  }
  return r;
}

/// scale * (a sx + b sy + (omega/2) sz); Hermitian by construction.
inline Mat2 field_matrix(const FieldSample& f, double scale) {
  Mat2 h;
  const cplx off(f.a, -f.b);  // a - i b
  h(0, 0) = cplx(scale * 0.5 * f.omega, 0.0);
  h(0, 1) = scale * off;
  h(1, 0) = scale * std::conj(off);
  h(1, 1) = cplx(-scale * 0.5 * f.omega, 0.0);
  return h;
}

/// Two-level Hamiltonian with the strength multiplicatively shifted by a
/// noise value: (j0 + c) * (a sx + b sy + (omega/2) sz).
inline Mat2 hamiltonian_matrix(const ModelSpec& m, double t, double noise_value = 0.0) {
  return field_matrix(eval_fields(m, t), m.j0 + noise_value);
}

/// Exchange-coupled pair mapped onto the canonical two-level fields via
/// |ud> => |up>, |du> => |down>. The complex coupling is c = a - i b.
inline FieldSample map_modelB_to_tls(cplx c, double omega) {
  FieldSample f;
  f.a = c.real();
  f.b = -c.imag();
  f.omega = omega;
  return f;
}

/// Full 4x4 Hamiltonian of the coupled pair in the basis
/// {|uu>, |ud>, |du>, |dd>}:
///   H = j0 [ c s1+ s2- + c* s1- s2+ + B1 s1z + B2 s2z ],
/// with B1 = B + omega/4, B2 = B - omega/4 and B the collective noise.
inline Mat4 model_b_full_hamiltonian(const FieldSample& f, double j0, double B) {
  const cplx c(f.a, -f.b);
  const double b1 = B + 0.25 * f.omega;
  const double b2 = B - 0.25 * f.omega;
  Mat4 h = Mat4::Zero();
  h(0, 0) = j0 * (b1 + b2);
  h(1, 1) = j0 * (b1 - b2);
  h(2, 2) = j0 * (b2 - b1);
  h(3, 3) = -j0 * (b1 + b2);
  h(1, 2) = j0 * c;
  h(2, 1) = j0 * std::conj(c);
  return h;
}

struct DfsCheck {
  bool within_tolerance = false;
  double collective_residual = 0.0;  // |B (s1z + s2z) |state>|
  double block_mismatch = 0.0;       // |P H4 P - H_eff| (Frobenius)
};

/// Verifies that the collective term B(s1z+s2z) annihilates the given
/// single-exciton state and that the 4x4 Hamiltonian restricted to the
/// single-exciton subspace equals the mapped two-level Hamiltonian.
inline DfsCheck validate_dfs(const FieldSample& f, double j0, double B,
                             const Vec2& exciton_state, double tol = 1e-12) {
  DfsCheck out;
  Vec4 state = Vec4::Zero();
  state(1) = exciton_state(0);  // |ud>
  state(2) = exciton_state(1);  // |du>

  Mat4 collective = Mat4::Zero();
  collective(0, 0) = 2.0 * j0 * B;
  collective(3, 3) = -2.0 * j0 * B;
  out.collective_residual = (collective * state).norm();

  const Mat4 h4 = model_b_full_hamiltonian(f, j0, B);
  Mat2 block;
  block << h4(1, 1), h4(1, 2), h4(2, 1), h4(2, 2);
  const Mat2 mapped = field_matrix(map_modelB_to_tls(cplx(f.a, -f.b), f.omega), j0);
  out.block_mismatch = (block - mapped).norm();

  out.within_tolerance = out.collective_residual <= tol && out.block_mismatch <= tol;
  return out;
}

}  // namespace qadia
