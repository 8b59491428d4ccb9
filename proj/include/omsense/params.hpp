#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

#include "omsense/constants.hpp"

namespace omsense {

struct invalid_parameter : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Mean thermal phonon occupation of a bath at `temperature` (K) for a
// mechanical mode at `omega_m_phys` (rad/s). Returns 0 at T = 0.
inline double thermal_occupation(double temperature, double omega_m_phys) {
  if (!std::isfinite(temperature) || !std::isfinite(omega_m_phys)) {
    throw invalid_parameter("thermal_occupation: non-finite input");
  }
  if (temperature < 0.0) {
    throw invalid_parameter("thermal_occupation: temperature must be >= 0");
  }
  if (omega_m_phys <= 0.0) {
    throw invalid_parameter("thermal_occupation: omega_m_phys must be > 0");
  }
  if (temperature == 0.0) return 0.0;
  // 1/(exp(hbar w / kB T) - 1); expm1 keeps precision for small arguments.
  return 1.0 / std::expm1(kHbar * omega_m_phys / (kBoltzmann * temperature));
}

// Reduce an angle to [0, 2*pi).
inline double reduced_phase(double x) {
  double r = std::fmod(x, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;  // fmod rounding at the boundary
  return r;
}

// All rates in units of omega_m (omega_m == 1 internally). The physical
// mechanical frequency enters only through the temperature conversion.
struct SystemParams {
  double kappa = 0.1;        // cavity decay rate
  double gamma = 1e-5;       // mechanical damping rate
  double delta_eff = 0.0;    // effective cavity detuning Delta'
  double g_eff = 4.5e-3;     // effective coupling G' = sqrt(2) G
  double v_hop = 0.01;       // phonon hopping strength V
  double phi = 0.0;          // hopping phase, stored in [0, 2*pi)
  double theta = kPi / 2.0;  // homodyne phase, stored in [0, 2*pi)
  double n_bar = 0.0;        // mean thermal occupation
  std::optional<double> omega_m_phys;  // rad/s; provenance of n_bar only
};

// Checks constraints and returns a copy with phases reduced to [0, 2*pi).
// Factories and the config layer funnel through this; the numeric kernels
// assume validated input.
inline SystemParams validated(SystemParams p) {
  auto need = [](bool ok, const char* msg) {
    if (!ok) throw invalid_parameter(msg);
  };
  need(std::isfinite(p.kappa) && p.kappa > 0.0, "kappa must be finite and > 0");
  need(std::isfinite(p.gamma) && p.gamma > 0.0, "gamma must be finite and > 0");
  need(std::isfinite(p.delta_eff), "delta_eff must be finite");
  need(std::isfinite(p.g_eff) && p.g_eff >= 0.0, "g_eff must be finite and >= 0");
  need(std::isfinite(p.v_hop) && p.v_hop >= 0.0, "v_hop must be finite and >= 0");
  need(std::isfinite(p.phi), "phi must be finite");
  need(std::isfinite(p.theta), "theta must be finite");
  need(std::isfinite(p.n_bar) && p.n_bar >= 0.0, "n_bar must be finite and >= 0");
  if (p.omega_m_phys) {
    need(std::isfinite(*p.omega_m_phys) && *p.omega_m_phys > 0.0,
         "omega_m_phys must be finite and > 0");
  }
  p.phi = reduced_phase(p.phi);
  p.theta = reduced_phase(p.theta);
  return p;
}

// Table-1 defaults; n_bar from (T = 0.077 K, omega_m = 2*pi*3.6 MHz).
inline SystemParams default_params() {
  SystemParams p;
  p.omega_m_phys = kTwoPi * 3.6e6;
  p.n_bar = thermal_occupation(0.077, *p.omega_m_phys);
  return p;
}

// Construct with a directly supplied occupation.
inline SystemParams params_with_nbar(SystemParams base, double n_bar) {
  base.n_bar = n_bar;
  base.omega_m_phys.reset();
  return validated(base);
}

// Construct with the (temperature, physical frequency) pair instead.
inline SystemParams params_with_temperature(SystemParams base, double temperature,
                                            double omega_m_phys) {
  base.omega_m_phys = omega_m_phys;
  base.n_bar = thermal_occupation(temperature, omega_m_phys);
  return validated(base);
}

}  // namespace omsense
