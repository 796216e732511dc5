#pragma once

// Microgrid unit models: quadratic/linear generation costs, PV
// irradiance-to-power conversion and the piecewise wind power curve.
// All powers are kW, all costs currency-units per hour.

#include <cmath>
#include <string>

#include "mdisp/errors.hpp"

namespace mdisp {

enum class GeneratorKind { Chp, Ng, Ds, Pv, Wind };

constexpr bool is_conventional(GeneratorKind k) {
  return k == GeneratorKind::Chp || k == GeneratorKind::Ng ||
         k == GeneratorKind::Ds;
}

constexpr bool is_renewable(GeneratorKind k) { return !is_conventional(k); }

inline const char* to_string(GeneratorKind k) {
  switch (k) {
    case GeneratorKind::Chp: return "chp";
    case GeneratorKind::Ng: return "ng";
    case GeneratorKind::Ds: return "ds";
    case GeneratorKind::Pv: return "pv";
    case GeneratorKind::Wind: return "wind";
  }
  return "?";
}

inline GeneratorKind kind_from_string(const std::string& s) {
  if (s == "chp") return GeneratorKind::Chp;
  if (s == "ng") return GeneratorKind::Ng;
  if (s == "ds") return GeneratorKind::Ds;
  if (s == "pv") return GeneratorKind::Pv;
  if (s == "wind") return GeneratorKind::Wind;
  throw InputDomainError("unknown generator kind: " + s);
}

/// c(p) = alpha + beta*p + gamma*p^2, gamma >= 0 so the cost is convex.
struct QuadraticCost {
  double alpha = 0.0;  // currency/h
  double beta = 0.0;   // currency/kWh
  double gamma = 0.0;  // currency/(kW^2 h)
};

/// Annuitization factor a = r / (1 - (1+r)^-N).
inline double annuity_factor(double r_interest, int lifetime_years) {
  if (!(r_interest > 0.0) || lifetime_years < 1)
    throw InputDomainError("annuity_factor: need r > 0 and lifetime >= 1");
  return r_interest / (1.0 - std::pow(1.0 + r_interest, -lifetime_years));
}

/// Per-kW dispatch cost of a renewable unit, k = a*invest + maint, where
/// a annuitizes the investment over the unit lifetime.
struct LinearCost {
  double coeff = 0.0;  // currency/kWh

  // Derivation inputs, kept for config round-tripping.
  double r_interest = 0.0;
  int lifetime_years = 0;
  double invest_per_kw = 0.0;
  double maint_per_kw = 0.0;

  static LinearCost from_annuity(double r_interest, int lifetime_years,
                                 double invest_per_kw, double maint_per_kw) {
    LinearCost c;
    c.r_interest = r_interest;
    c.lifetime_years = lifetime_years;
    c.invest_per_kw = invest_per_kw;
    c.maint_per_kw = maint_per_kw;
    c.coeff = annuity_factor(r_interest, lifetime_years) * invest_per_kw +
              maint_per_kw;
    if (!(c.coeff > 0.0))
      throw InputDomainError("LinearCost: derived coefficient must be > 0");
    return c;
  }
};

/// One dispatchable unit. Conventional units (CHP/NG/DS) carry a quadratic
/// cost; renewables (PV/wind) a linear one. Ramp limits are per timestep.
struct GeneratorSpec {
  std::string name;
  GeneratorKind kind = GeneratorKind::Chp;
  QuadraticCost quad;
  LinearCost linear;
  double p_min_kw = 0.0;
  double p_max_kw = 0.0;
  double ramp_up_kw = 0.0;
  double ramp_down_kw = 0.0;
  bool committed = true;  // U flag for this timestep

  void validate() const {
    if (!(0.0 <= p_min_kw) || !(p_min_kw <= p_max_kw))
      throw InputDomainError("GeneratorSpec " + name +
                             ": need 0 <= p_min <= p_max");
    if (ramp_up_kw < 0.0 || ramp_down_kw < 0.0)
      throw InputDomainError("GeneratorSpec " + name + ": ramps must be >= 0");
    if (is_conventional(kind) && quad.gamma < 0.0)
      throw InputDomainError("GeneratorSpec " + name + ": gamma must be >= 0");
    if (is_renewable(kind) && !(linear.coeff > 0.0))
      throw InputDomainError("GeneratorSpec " + name +
                             ": renewable cost coefficient must be > 0");
  }
};

/// PV panel constants. Output scales linearly with irradiance and is
/// derated by (1 + k*(t_ref - t)) with the usual negative temperature
/// coefficient (-0.0047 1/degC by default).
struct PvPhysics {
  double p_stc_kw = 0.0;       // rated output at standard test conditions
  double i_stc_wm2 = 1000.0;   // reference irradiance
  double temp_coeff = -0.0047; // 1/degC
  double t_ref_c = 25.0;       // reference cell temperature
};

/// Piecewise wind turbine curve: zero below cut-in and above cut-off,
/// linear between cut-in and rated speed, flat at rated power up to cut-off.
struct WindPhysics {
  double p_rated_kw = 0.0;
  double v_cut_in_ms = 0.0;
  double v_rated_ms = 0.0;
  double v_cut_off_ms = 0.0;

  void validate() const {
    if (!(0.0 < v_cut_in_ms && v_cut_in_ms < v_rated_ms &&
          v_rated_ms < v_cut_off_ms))
      throw InputDomainError("WindPhysics: need 0 < cut_in < rated < cut_off");
  }
};

/// Hourly generation cost at output p.
inline double eval_cost(const GeneratorSpec& g, double p_kw) {
  if (!std::isfinite(p_kw) || p_kw < 0.0)
    throw InputDomainError("eval_cost: power must be finite and >= 0");
  if (is_conventional(g.kind))
    return g.quad.alpha + g.quad.beta * p_kw + g.quad.gamma * p_kw * p_kw;
  return g.linear.coeff * p_kw;
}

/// d(cost)/dp at output p; constant for renewables, affine for quadratics.
inline double marginal_cost(const GeneratorSpec& g, double p_kw) {
  if (!std::isfinite(p_kw) || p_kw < g.p_min_kw - 1e-9 ||
      p_kw > g.p_max_kw + 1e-9)
    throw InputDomainError("marginal_cost: power outside [p_min, p_max]");
  if (is_conventional(g.kind)) return g.quad.beta + 2.0 * g.quad.gamma * p_kw;
  return g.linear.coeff;
}

/// Available PV power for the given irradiance and cell temperature,
/// clamped at zero from below.
inline double pv_power(const PvPhysics& pv, double irradiance_wm2,
                       double temp_c) {
  if (!std::isfinite(irradiance_wm2) || irradiance_wm2 < 0.0)
    throw InputDomainError("pv_power: irradiance must be finite and >= 0");
  const double rho = pv.p_stc_kw * irradiance_wm2 / pv.i_stc_wm2;
  const double p = rho * (1.0 + pv.temp_coeff * (pv.t_ref_c - temp_c));
  return p > 0.0 ? p : 0.0;
}

/// Available wind power at wind speed v.
inline double wind_power(const WindPhysics& w, double v_ms) {
  if (!std::isfinite(v_ms) || v_ms < 0.0)
    throw InputDomainError("wind_power: wind speed must be finite and >= 0");
  if (v_ms < w.v_cut_in_ms || v_ms > w.v_cut_off_ms) return 0.0;
  if (v_ms <= w.v_rated_ms)
    return w.p_rated_kw * (v_ms - w.v_cut_in_ms) /
           (w.v_rated_ms - w.v_cut_in_ms);
  return w.p_rated_kw;
}

}  // namespace mdisp
