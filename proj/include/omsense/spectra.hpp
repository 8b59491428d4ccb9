#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdio>
#include <limits>
#include <string>

#include "omsense/model.hpp"
#include "omsense/params.hpp"

namespace omsense {

struct singular_solve : std::runtime_error {
  double omega;
  explicit singular_solve(double w, const std::string& what)
      : std::runtime_error(what), omega(w) {}
};

inline std::string format_omega(double w) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", w);
  return buf;
}

using Matrix6c = Eigen::Matrix<std::complex<double>, 6, 6>;

// Frequency-domain susceptibility (-i omega I - A)^{-1} with an identity
// residual kept as a diagnostic.
struct Susceptibility {
  double omega = 0.0;
  Matrix6c matrix;
  double residual = 0.0;  // max-norm of (-i w I - A) * matrix - I
};

inline Susceptibility susceptibility(const SystemParams& p, double omega) {
  if (!std::isfinite(omega)) throw invalid_parameter("susceptibility: omega must be finite");
  const std::complex<double> miw(0.0, -omega);
  Matrix6c s = drift_matrix(p).cast<std::complex<double>>() * (-1.0);
  for (int i = 0; i < 6; ++i) s(i, i) += miw;
  Eigen::FullPivLU<Matrix6c> lu(s);
  if (!lu.isInvertible()) {
    throw singular_solve(omega, "singular susceptibility solve at omega = " + format_omega(omega));
  }
  Susceptibility out;
  out.omega = omega;
  out.matrix = lu.inverse();
  out.residual = (s * out.matrix - Matrix6c::Identity()).cwiseAbs().maxCoeff();
  return out;
}

// Homodyne transfer coefficients of Eq.-(8) form: the detected quadrature is
// P_theta = A1 X_in + A2 P_in + A3 f_in1 + A4 f_in2.
struct OutputCoefficients {
  double omega = 0.0;
  std::complex<double> a1, a2, a3, a4;
};

inline OutputCoefficients output_coefficients(const SystemParams& p,
                                              const Susceptibility& chi) {
  const double sk = std::sqrt(2.0 * p.kappa);
  const double sg = std::sqrt(2.0 * p.gamma);
  const Matrix6c& m = chi.matrix;
  // Intracavity coefficients of (X_in, P_in, f_in1, f_in2) in X_c and P_c.
  const std::complex<double> k1 = sk * m(kXc, kXc);
  const std::complex<double> k2 = sk * m(kXc, kPc);
  const std::complex<double> k3 = sg * m(kXc, kP1);
  const std::complex<double> k4 = sg * m(kXc, kP2);
  const std::complex<double> k5 = sk * m(kPc, kXc);
  const std::complex<double> k6 = sk * m(kPc, kPc);
  const std::complex<double> k7 = sg * m(kPc, kP1);
  const std::complex<double> k8 = sg * m(kPc, kP2);
  // Output field: X_c^o = sqrt(2 kappa) X_c - X_in, P_c^o = sqrt(2 kappa) P_c - P_in.
  const std::complex<double> t1 = sk * k1 - 1.0;
  const std::complex<double> t2 = sk * k2;
  const std::complex<double> t3 = sk * k3;
  const std::complex<double> t4 = sk * k4;
  const std::complex<double> t5 = sk * k5;
  const std::complex<double> t6 = sk * k6 - 1.0;
  const std::complex<double> t7 = sk * k7;
  const std::complex<double> t8 = sk * k8;
  const double ct = std::cos(p.theta);
  const double st = std::sin(p.theta);
  OutputCoefficients c;
  c.omega = chi.omega;
  c.a1 = ct * t1 + st * t5;
  c.a2 = ct * t2 + st * t6;
  c.a3 = ct * t3 + st * t7;
  c.a4 = ct * t4 + st * t8;
  return c;
}

inline OutputCoefficients output_coefficients(const SystemParams& p, double omega) {
  return output_coefficients(p, susceptibility(p, omega));
}

// Signal transduction gain for a force driving both oscillators in phase.
inline double mechanical_response(const OutputCoefficients& c) {
  return std::norm(c.a3 + c.a4);
}

// Mechanical-bath noise referred to the force input. Divergent where the
// common-mode transduction a3 + a4 vanishes; reported as +inf, not thrown.
inline double thermal_noise(const OutputCoefficients& c, double n_bar) {
  const double rm = std::norm(c.a3 + c.a4);
  const double num = (n_bar + 0.5) * (std::norm(c.a3) + std::norm(c.a4));
  if (rm == 0.0) return std::numeric_limits<double>::infinity();
  return num / rm;
}

// Optical (shot + back-action) noise referred to the force input.
inline double added_noise(const OutputCoefficients& c) {
  const double rm = std::norm(c.a3 + c.a4);
  const double num = 0.5 * (std::norm(c.a1) + std::norm(c.a2));
  if (rm == 0.0) return std::numeric_limits<double>::infinity();
  return num / rm;
}

struct SpectrumSample {
  double omega = 0.0;
  double r_m = 0.0;
  double s_th = 0.0;
  double n_add = 0.0;
  double s_total = 0.0;
  double sql_margin = 0.0;  // 0.5 - n_add
};

inline SpectrumSample make_sample(const OutputCoefficients& c, double n_bar, double s_fex) {
  SpectrumSample s;
  s.omega = c.omega;
  s.r_m = mechanical_response(c);
  s.s_th = thermal_noise(c, n_bar);
  s.n_add = added_noise(c);
  s.sql_margin = kSql - s.n_add;
  // Total output PSD R_m (S_th + N_add + s_fex). The product is evaluated as
  // the algebraically identical direct sum, which stays finite near
  // antiresonances; R_m = 0 yields 0 (zero transduction, Eq.-(11) composition).
  if (s.r_m == 0.0) {
    s.s_total = 0.0;
  } else {
    s.s_total = (n_bar + 0.5) * (std::norm(c.a3) + std::norm(c.a4)) +
                0.5 * (std::norm(c.a1) + std::norm(c.a2)) + s.r_m * s_fex;
  }
  return s;
}

// Full spectral decomposition at one frequency. s_fex is the user-supplied
// signal-force spectral density (default none).
inline SpectrumSample total_spectrum(const SystemParams& p, double omega, double s_fex = 0.0) {
  if (!(s_fex >= 0.0)) throw invalid_parameter("total_spectrum: s_fex must be >= 0");
  return make_sample(output_coefficients(p, omega), p.n_bar, s_fex);
}

// Same pipeline on the single-oscillator system (X_c, P_c, X1, P1). Its
// thermal noise is identically n_bar + 1/2 (one mechanical input channel).
inline SpectrumSample single_mode_reference(const SystemParams& p, double omega) {
  if (!std::isfinite(omega)) throw invalid_parameter("single_mode_reference: omega must be finite");
  using Matrix4c = Eigen::Matrix<std::complex<double>, 4, 4>;
  const std::complex<double> miw(0.0, -omega);
  Matrix4c s = drift_matrix_single(p).cast<std::complex<double>>() * (-1.0);
  for (int i = 0; i < 4; ++i) s(i, i) += miw;
  Eigen::FullPivLU<Matrix4c> lu(s);
  if (!lu.isInvertible()) {
    throw singular_solve(omega,
                         "singular single-mode solve at omega = " + format_omega(omega));
  }
  const Matrix4c m = lu.inverse();
  const double sk = std::sqrt(2.0 * p.kappa);
  const double sg = std::sqrt(2.0 * p.gamma);
  const std::complex<double> t1 = sk * sk * m(0, 0) - 1.0;
  const std::complex<double> t2 = sk * sk * m(0, 1);
  const std::complex<double> t3 = sk * sg * m(0, 3);
  const std::complex<double> t5 = sk * sk * m(1, 0);
  const std::complex<double> t6 = sk * sk * m(1, 1) - 1.0;
  const std::complex<double> t7 = sk * sg * m(1, 3);
  const double ct = std::cos(p.theta);
  const double st = std::sin(p.theta);
  const std::complex<double> a1 = ct * t1 + st * t5;
  const std::complex<double> a2 = ct * t2 + st * t6;
  const std::complex<double> a3 = ct * t3 + st * t7;
  SpectrumSample out;
  out.omega = omega;
  out.r_m = std::norm(a3);
  out.s_th = p.n_bar + 0.5;
  if (out.r_m == 0.0) {
    out.n_add = std::numeric_limits<double>::infinity();
    out.s_total = 0.0;
  } else {
    out.n_add = 0.5 * (std::norm(a1) + std::norm(a2)) / out.r_m;
    out.s_total = (p.n_bar + 0.5) * std::norm(a3) + 0.5 * (std::norm(a1) + std::norm(a2));
  }
  out.sql_margin = kSql - out.n_add;
  return out;
}

}  // namespace omsense
