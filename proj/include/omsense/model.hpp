#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <array>
#include <cmath>
#include <complex>

#include "omsense/params.hpp"

namespace omsense {

// Quadrature ordering of the fluctuation vector u = (X_c, P_c, X1, X2, P1, P2).
enum QuadIndex { kXc = 0, kPc = 1, kX1 = 2, kX2 = 3, kP1 = 4, kP2 = 5 };

using DriftMatrix = Eigen::Matrix<double, 6, 6>;

// Drift matrix of the linearized Langevin equations, du/dt = A u + noise.
// Rows follow the quadrature ordering above; omega_m == 1.
inline DriftMatrix drift_matrix(const SystemParams& p) {
  const double s = std::sin(p.phi);
  const double c = std::cos(p.phi);
  const double V = p.v_hop;
  const double G = p.g_eff;
  const double wm = 1.0;
  DriftMatrix a = DriftMatrix::Zero();
  a(kXc, kXc) = -p.kappa;
  a(kXc, kPc) = p.delta_eff;
  a(kPc, kXc) = -p.delta_eff;
  a(kPc, kPc) = -p.kappa;
  a(kPc, kX1) = -G;
  a(kPc, kX2) = -G;
  a(kX1, kX2) = V * s;
  a(kX1, kP1) = wm;
  a(kX1, kP2) = V * c;
  a(kX2, kX1) = -V * s;
  a(kX2, kP1) = V * c;
  a(kX2, kP2) = wm;
  a(kP1, kXc) = -G;
  a(kP1, kX1) = -wm;
  a(kP1, kX2) = -V * c;
  a(kP1, kP1) = -p.gamma;
  a(kP1, kP2) = V * s;
  a(kP2, kXc) = -G;
  a(kP2, kX1) = -V * c;
  a(kP2, kX2) = -wm;
  a(kP2, kP1) = -V * s;
  a(kP2, kP2) = -p.gamma;
  return a;
}

// Single-oscillator reference system (X_c, P_c, X1, P1) with the same rates.
using DriftMatrix4 = Eigen::Matrix<double, 4, 4>;

inline DriftMatrix4 drift_matrix_single(const SystemParams& p) {
  DriftMatrix4 a = DriftMatrix4::Zero();
  a(0, 0) = -p.kappa;
  a(0, 1) = p.delta_eff;
  a(1, 0) = -p.delta_eff;
  a(1, 1) = -p.kappa;
  a(1, 2) = -p.g_eff;
  a(2, 3) = 1.0;
  a(3, 0) = -p.g_eff;
  a(3, 2) = -1.0;
  a(3, 3) = -p.gamma;
  return a;
}

struct StabilityReport {
  std::array<std::complex<double>, 6> eigenvalues{};
  bool stable = false;     // all real parts < 0
  double margin = 0.0;     // max real part
};

inline StabilityReport stability_check(const DriftMatrix& a) {
  Eigen::EigenSolver<DriftMatrix> solver(a, /*computeEigenvectors=*/false);
  StabilityReport r;
  double margin = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < 6; ++i) {
    r.eigenvalues[static_cast<std::size_t>(i)] = solver.eigenvalues()(i);
    margin = std::max(margin, solver.eigenvalues()(i).real());
  }
  r.margin = margin;
  r.stable = margin < 0.0;
  return r;
}

enum class DarkLabel { plus_dark, minus_dark, none };

inline const char* to_string(DarkLabel l) {
  switch (l) {
    case DarkLabel::plus_dark: return "plus-dark";
    case DarkLabel::minus_dark: return "minus-dark";
    default: return "none";
  }
}

// Hybrid-mode decomposition B_pm of the two oscillators: effective couplings
// G_pm = (G/sqrt(2)) (1 pm e^{mp i phi}), frequencies omega_pm = 1 pm V, and
// the common-force coupling factors (1 pm e^{mp i phi}). G = g_eff/sqrt(2).
struct HybridModes {
  std::complex<double> g_plus, g_minus;
  double omega_plus = 0.0, omega_minus = 0.0;
  DarkLabel dark_label = DarkLabel::none;
  std::complex<double> force_factor_plus, force_factor_minus;
};

inline HybridModes hybrid_modes(const SystemParams& p) {
  constexpr double eps = 1e-12;  // relative dark-mode classification threshold
  const double g_single = p.g_eff / std::sqrt(2.0);
  const std::complex<double> em(std::cos(p.phi), -std::sin(p.phi));  // e^{-i phi}
  const std::complex<double> ep(std::cos(p.phi), std::sin(p.phi));   // e^{+i phi}
  HybridModes h;
  h.force_factor_plus = 1.0 + em;
  h.force_factor_minus = 1.0 - ep;
  h.g_plus = (g_single / std::sqrt(2.0)) * h.force_factor_plus;
  h.g_minus = (g_single / std::sqrt(2.0)) * h.force_factor_minus;
  h.omega_plus = 1.0 + p.v_hop;
  h.omega_minus = 1.0 - p.v_hop;
  const double scale = eps * std::abs(g_single);
  if (std::abs(h.g_minus) < scale) {
    h.dark_label = DarkLabel::minus_dark;
  } else if (std::abs(h.g_plus) < scale) {
    h.dark_label = DarkLabel::plus_dark;
  }
  return h;
}

}  // namespace omsense
