#pragma once

// Ground-truth dispatch solver. A single timestep is a convex allocation
// problem: meet the load at minimum cost with every unit inside its
// effective bounds. Solved by bisection on the shared marginal price: at
// the optimum every unit strictly inside its bounds runs at marginal cost
// lambda, units pinned at a bound sit on the cheap side of lambda.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mdisp/errors.hpp"
#include "mdisp/grid.hpp"

namespace mdisp {

/// One unit plus its effective (commitment- and ramp-tightened) bounds for
/// a single timestep. `u_fixed` marks the commitment flag as given rather
/// than free for enumeration. For uncommitted fixed units the bounds
/// collapse to [0, 0]; for enumeration candidates lo/hi hold the
/// committed-case bounds.
struct UnitBox {
  GeneratorSpec spec;
  double lo_kw = 0.0;
  double hi_kw = 0.0;
  bool u_fixed = true;
};

struct DispatchInstance {
  double load_kw = 0.0;
  std::vector<UnitBox> units;
};

struct DispatchSolution {
  std::vector<double> setpoints_kw;
  double total_cost = 0.0;
  double balance_residual_kw = 0.0;  // sum(setpoints) - load
  double lambda_star = 0.0;
  std::vector<std::uint8_t> committed;
};

struct HorizonSolution {
  std::vector<DispatchSolution> steps;
  double total_cost = 0.0;
  bool ramp_feasible = true;
};

namespace detail {

// Marginal price of box `u` treated as a one-sided supply curve. Quadratic
// units with gamma > 0 respond continuously; everything else (renewables,
// gamma == 0) has a flat marginal and jumps between its bounds.
inline bool has_flat_marginal(const GeneratorSpec& g) {
  return is_renewable(g.kind) || g.quad.gamma == 0.0;
}

inline double flat_marginal(const GeneratorSpec& g) {
  return is_renewable(g.kind) ? g.linear.coeff : g.quad.beta;
}

// Power supplied by one unit at price lambda; ties on flat units resolve
// to the lower bound here (the allocation pass fixes them up).
inline double supply_at(const UnitBox& u, double lo, double hi,
                        double lambda) {
  if (hi <= lo) return lo;
  const GeneratorSpec& g = u.spec;
  if (has_flat_marginal(g)) return lambda > flat_marginal(g) ? hi : lo;
  const double p = (lambda - g.quad.beta) / (2.0 * g.quad.gamma);
  return std::clamp(p, lo, hi);
}

}  // namespace detail

/// Builds a per-timestep instance from fleet specs. `renewable_cap_kw`
/// gives the currently available power per unit (read only for PV/wind);
/// `prev_setpoints_kw`, when present, tightens bounds by the ramp limits.
/// An uncommitted unit gets [0, 0]. Renewable lower bounds are clamped to
/// the availability cap: weather-driven drops are not dispatchable, so the
/// cap overrides ramp-down.
inline DispatchInstance make_instance(
    const std::vector<GeneratorSpec>& fleet, double load_kw,
    const std::vector<double>& renewable_cap_kw,
    const std::vector<double>* prev_setpoints_kw = nullptr) {
  if (renewable_cap_kw.size() != fleet.size())
    throw ShapeError("make_instance: cap vector arity mismatch");
  if (prev_setpoints_kw && prev_setpoints_kw->size() != fleet.size())
    throw ShapeError("make_instance: previous setpoint arity mismatch");
  DispatchInstance inst;
  inst.load_kw = load_kw;
  inst.units.reserve(fleet.size());
  for (std::size_t i = 0; i < fleet.size(); ++i) {
    const GeneratorSpec& g = fleet[i];
    g.validate();
    UnitBox box{g, 0.0, 0.0, true};
    if (g.committed) {
      double lo = g.p_min_kw;
      double hi = g.p_max_kw;
      if (is_renewable(g.kind)) hi = std::min(hi, renewable_cap_kw[i]);
      if (prev_setpoints_kw) {
        const double prev = (*prev_setpoints_kw)[i];
        lo = std::max(lo, prev - g.ramp_down_kw);
        hi = std::min(hi, prev + g.ramp_up_kw);
      }
      if (is_renewable(g.kind)) lo = std::min(lo, hi);
      box.lo_kw = lo;
      box.hi_kw = hi;
    }
    inst.units.push_back(std::move(box));
  }
  return inst;
}

namespace detail {

// Core single-timestep solve with an explicit commitment vector.
inline DispatchSolution solve_core(const DispatchInstance& inst,
                                   const std::vector<std::uint8_t>& committed,
                                   double balance_tol_kw) {
  const std::size_t n = inst.units.size();
  std::vector<double> lo(n), hi(n);
  double sum_lo = 0.0, sum_hi = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const UnitBox& u = inst.units[i];
    lo[i] = committed[i] ? u.lo_kw : 0.0;
    hi[i] = committed[i] ? u.hi_kw : 0.0;
    if (lo[i] > hi[i] + 1e-12)
      throw InputDomainError("solve: unit " + u.spec.name +
                             " has empty bounds");
    sum_lo += lo[i];
    sum_hi += hi[i];
  }
  if (inst.load_kw > sum_hi + balance_tol_kw)
    throw InfeasibleError("dispatch infeasible: load exceeds capacity",
                          inst.load_kw - sum_hi);
  if (inst.load_kw < sum_lo - balance_tol_kw)
    throw InfeasibleError("dispatch infeasible: load below committed minimum",
                          inst.load_kw - sum_lo);

  // Price bracket: at lambda_lo every unit sits at its lower bound, at
  // lambda_hi at its upper bound.
  double lambda_lo = std::numeric_limits<double>::infinity();
  double lambda_hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const GeneratorSpec& g = inst.units[i].spec;
    double m_lo, m_hi;
    if (detail::has_flat_marginal(g)) {
      m_lo = m_hi = detail::flat_marginal(g);
    } else {
      m_lo = g.quad.beta + 2.0 * g.quad.gamma * lo[i];
      m_hi = g.quad.beta + 2.0 * g.quad.gamma * hi[i];
    }
    lambda_lo = std::min(lambda_lo, m_lo);
    lambda_hi = std::max(lambda_hi, m_hi);
  }
  if (!std::isfinite(lambda_lo)) lambda_lo = 0.0;  // empty fleet
  if (!std::isfinite(lambda_hi)) lambda_hi = 0.0;
  lambda_lo -= 1.0;
  lambda_hi += 1.0;

  const auto total_supply = [&](double lambda) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      s += detail::supply_at(inst.units[i], lo[i], hi[i], lambda);
    return s;
  };

  constexpr int kMaxIter = 200;
  double lambda = 0.5 * (lambda_lo + lambda_hi);
  bool balanced = false;
  for (int it = 0; it < kMaxIter; ++it) {
    lambda = 0.5 * (lambda_lo + lambda_hi);
    const double s = total_supply(lambda);
    if (std::abs(s - inst.load_kw) <= balance_tol_kw) {
      balanced = true;
      break;
    }
    if (s < inst.load_kw)
      lambda_lo = lambda;
    else
      lambda_hi = lambda;
  }

  DispatchSolution sol;
  sol.committed = committed;
  sol.lambda_star = lambda;
  sol.setpoints_kw.resize(n);
  double sum = 0.0;
  std::vector<std::size_t> tied;
  for (std::size_t i = 0; i < n; ++i) {
    const UnitBox& u = inst.units[i];
    double p = detail::supply_at(u, lo[i], hi[i], lambda);
    if (!balanced && detail::has_flat_marginal(u.spec) && hi[i] > lo[i]) {
      // Flat-marginal unit whose price sits inside the final bracket: the
      // supply curve jumps here, so this unit absorbs the residual.
      const double m = detail::flat_marginal(u.spec);
      const double slack = 1e-12 * (1.0 + std::abs(m));
      if (m >= lambda_lo - slack && m <= lambda_hi + slack) {
        p = lo[i];
        tied.push_back(i);
      }
    }
    sol.setpoints_kw[i] = p;
    sum += p;
  }

  if (!balanced) {
    // Split the residual equally across tied units, clamping at their upper
    // bounds and redistributing what clamped units could not take.
    double remaining = inst.load_kw - sum;
    std::vector<std::size_t> active = tied;
    while (remaining > balance_tol_kw * 0.5 && !active.empty()) {
      const double share = remaining / static_cast<double>(active.size());
      std::vector<std::size_t> next;
      for (std::size_t i : active) {
        const double room = hi[i] - sol.setpoints_kw[i];
        const double take = std::min(share, room);
        sol.setpoints_kw[i] += take;
        remaining -= take;
        if (take < room) next.push_back(i);
      }
      if (next.size() == active.size() && share <= 0.0) break;
      active = std::move(next);
    }
    sum = 0.0;
    for (double p : sol.setpoints_kw) sum += p;
  }

  sol.balance_residual_kw = sum - inst.load_kw;
  if (std::abs(sol.balance_residual_kw) > balance_tol_kw)
    throw NumericalError("lambda bisection failed to balance within " +
                         std::to_string(kMaxIter) + " iterations");
  sol.total_cost = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    if (committed[i]) sol.total_cost += eval_cost(inst.units[i].spec,
                                                  sol.setpoints_kw[i]);
  return sol;
}

}  // namespace detail

/// Minimum-cost allocation for one timestep with commitment flags as given.
inline DispatchSolution solve_single(const DispatchInstance& inst,
                                     double balance_tol_kw = 1e-9) {
  std::vector<std::uint8_t> committed(inst.units.size());
  for (std::size_t i = 0; i < inst.units.size(); ++i)
    committed[i] = inst.units[i].spec.committed ? 1 : 0;
  return detail::solve_core(inst, committed, balance_tol_kw);
}

/// Enumerates on/off states of every conventional unit not marked
/// `u_fixed`, solves each feasible combination and returns the cheapest.
/// Ties break toward fewer committed units, then lexicographically over
/// the commitment vector in unit order (off before on).
inline DispatchSolution solve_with_commitment(const DispatchInstance& inst,
                                              double balance_tol_kw = 1e-9) {
  std::vector<std::size_t> free_units;
  for (std::size_t i = 0; i < inst.units.size(); ++i) {
    const UnitBox& u = inst.units[i];
    if (!u.u_fixed && is_conventional(u.spec.kind)) free_units.push_back(i);
  }
  if (free_units.size() > 12)
    throw InputDomainError("solve_with_commitment: > 12 free units");

  std::vector<std::uint8_t> base(inst.units.size());
  for (std::size_t i = 0; i < inst.units.size(); ++i)
    base[i] = inst.units[i].spec.committed ? 1 : 0;

  std::optional<DispatchSolution> best;
  std::size_t best_count = 0;
  const auto count_on = [](const std::vector<std::uint8_t>& c) {
    std::size_t k = 0;
    for (auto v : c) k += v;
    return k;
  };

  const std::uint32_t combos = 1u << free_units.size();
  double worst_deficit = -std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 0; mask < combos; ++mask) {
    std::vector<std::uint8_t> committed = base;
    for (std::size_t b = 0; b < free_units.size(); ++b)
      committed[free_units[b]] = (mask >> b) & 1u;
    try {
      DispatchSolution sol =
          detail::solve_core(inst, committed, balance_tol_kw);
      const std::size_t on = count_on(sol.committed);
      if (!best) {
        best = std::move(sol);
        best_count = on;
        continue;
      }
      const double eps = 1e-9 * (1.0 + std::abs(best->total_cost));
      if (sol.total_cost < best->total_cost - eps ||
          (std::abs(sol.total_cost - best->total_cost) <= eps &&
           (on < best_count ||
            (on == best_count &&
             std::lexicographical_compare(sol.committed.begin(),
                                          sol.committed.end(),
                                          best->committed.begin(),
                                          best->committed.end()))))) {
        best = std::move(sol);
        best_count = on;
      }
    } catch (const InfeasibleError& e) {
      worst_deficit = std::max(worst_deficit, -std::abs(e.imbalance_kw));
      continue;
    }
  }
  if (!best)
    throw InfeasibleError("no feasible commitment combination",
                          worst_deficit);
  return *best;
}

/// Inputs for a sequential multi-timestep solve. `caps_kw[t][i]` is the
/// available power of unit i at step t (only read for renewables).
struct HorizonInput {
  std::vector<GeneratorSpec> fleet;
  std::vector<double> loads_kw;
  std::vector<std::vector<double>> caps_kw;
  std::optional<std::vector<double>> initial_setpoints_kw;
  double balance_tol_kw = 1e-9;
};

/// Greedy time decomposition: each timestep is solved with bounds
/// tightened by the previous step's setpoints and the ramp limits. The
/// first step ramps from `initial_setpoints_kw` when given, otherwise it
/// sees static bounds only.
inline HorizonSolution solve_horizon(const HorizonInput& in) {
  if (in.loads_kw.empty())
    throw InputDomainError("solve_horizon: empty load series");
  if (in.caps_kw.size() != in.loads_kw.size())
    throw ShapeError("solve_horizon: caps/loads length mismatch");
  if (in.initial_setpoints_kw) {
    if (in.initial_setpoints_kw->size() != in.fleet.size())
      throw ShapeError("solve_horizon: initial setpoint arity mismatch");
    for (std::size_t i = 0; i < in.fleet.size(); ++i) {
      const double p = (*in.initial_setpoints_kw)[i];
      if (p < in.fleet[i].p_min_kw - 1e-9 || p > in.fleet[i].p_max_kw + 1e-9)
        throw InputDomainError(
            "solve_horizon: initial setpoint outside static bounds");
    }
  }

  HorizonSolution out;
  out.steps.reserve(in.loads_kw.size());
  const std::vector<double>* prev =
      in.initial_setpoints_kw ? &*in.initial_setpoints_kw : nullptr;
  for (std::size_t t = 0; t < in.loads_kw.size(); ++t) {
    DispatchInstance inst =
        make_instance(in.fleet, in.loads_kw[t], in.caps_kw[t], prev);
    try {
      out.steps.push_back(solve_single(inst, in.balance_tol_kw));
    } catch (const InfeasibleError& e) {
      throw HorizonError("timestep " + std::to_string(t) +
                             " infeasible: " + e.what(),
                         t);
    } catch (const NumericalError& e) {
      throw HorizonError("timestep " + std::to_string(t) +
                             " failed: " + e.what(),
                         t);
    }
    out.total_cost += out.steps.back().total_cost;
    prev = &out.steps.back().setpoints_kw;
  }

  // Post-hoc ramp audit against the raw limits.
  for (std::size_t t = 0; t < out.steps.size(); ++t) {
    const std::vector<double>* before =
        t == 0 ? (in.initial_setpoints_kw ? &*in.initial_setpoints_kw
                                          : nullptr)
               : &out.steps[t - 1].setpoints_kw;
    if (!before) continue;
    for (std::size_t i = 0; i < in.fleet.size(); ++i) {
      const double d = out.steps[t].setpoints_kw[i] - (*before)[i];
      if (d > in.fleet[i].ramp_up_kw + 1e-9 ||
          -d > in.fleet[i].ramp_down_kw + 1e-9)
        out.ramp_feasible = false;
    }
  }
  return out;
}

/// Exhaustive grid search over the units' feasible intervals; keeps
/// allocations whose total lands within `grid_step_kw` of the load and
/// returns the cheapest. Independent of the bisection path; test oracle.
/// `lambda_star` is not produced by the grid search and is left NaN.
inline DispatchSolution brute_force_solve(const DispatchInstance& inst,
                                          double grid_step_kw) {
  const std::size_t n = inst.units.size();
  if (n == 0 || n > 4)
    throw InputDomainError("brute_force_solve: supports 1..4 units");
  if (!(grid_step_kw > 0.0))
    throw InputDomainError("brute_force_solve: grid step must be > 0");

  std::vector<double> lo(n), hi(n);
  std::vector<std::uint8_t> committed(n);
  for (std::size_t i = 0; i < n; ++i) {
    const UnitBox& u = inst.units[i];
    committed[i] = u.spec.committed ? 1 : 0;
    lo[i] = committed[i] ? u.lo_kw : 0.0;
    hi[i] = committed[i] ? u.hi_kw : 0.0;
  }

  // Grid points of unit i: lo, lo+s, ..., plus hi when it is off-grid.
  const auto point = [&](std::size_t i, long k) {
    const long steps =
        static_cast<long>(std::floor((hi[i] - lo[i]) / grid_step_kw + 1e-9));
    if (k > steps) return hi[i];
    return std::min(lo[i] + static_cast<double>(k) * grid_step_kw, hi[i]);
  };
  const auto last_index = [&](std::size_t i) {
    const long steps =
        static_cast<long>(std::floor((hi[i] - lo[i]) / grid_step_kw + 1e-9));
    const bool hi_on_grid =
        std::abs(lo[i] + static_cast<double>(steps) * grid_step_kw - hi[i]) <=
        1e-9 * grid_step_kw;
    return hi_on_grid ? steps : steps + 1;
  };

  double best_cost = std::numeric_limits<double>::infinity();
  std::vector<double> best_alloc;
  std::vector<double> alloc(n, 0.0);

  const auto unit_cost = [&](std::size_t i, double p) {
    return committed[i] ? eval_cost(inst.units[i].spec, p) : 0.0;
  };

  const auto scan_last = [&](double partial_sum, double partial_cost) {
    const std::size_t i = n - 1;
    const double need = inst.load_kw - partial_sum;
    const double wlo = std::max(lo[i], need - grid_step_kw);
    const double whi = std::min(hi[i], need + grid_step_kw);
    if (wlo > whi + 1e-12) return;
    const long kmin = std::max(
        0L, static_cast<long>(std::ceil((wlo - lo[i]) / grid_step_kw - 1e-9)));
    const long kmax = std::min(
        last_index(i),
        static_cast<long>(std::floor((whi - lo[i]) / grid_step_kw + 1e-9)));
    for (long k = kmin; k <= kmax + 1; ++k) {
      const double p = point(i, k);
      if (p < wlo - 1e-12 || p > whi + 1e-12) continue;
      const double c = partial_cost + unit_cost(i, p);
      if (c < best_cost) {
        best_cost = c;
        alloc[i] = p;
        best_alloc = alloc;
      }
    }
  };

  const auto recurse = [&](auto&& self, std::size_t i, double partial_sum,
                           double partial_cost) -> void {
    if (i == n - 1) {
      scan_last(partial_sum, partial_cost);
      return;
    }
    for (long k = 0; k <= last_index(i); ++k) {
      const double p = point(i, k);
      alloc[i] = p;
      self(self, i + 1, partial_sum + p, partial_cost + unit_cost(i, p));
    }
  };
  recurse(recurse, 0, 0.0, 0.0);

  if (best_alloc.empty())
    throw InfeasibleError("brute_force_solve: no grid point balances load",
                          0.0);

  DispatchSolution sol;
  sol.setpoints_kw = best_alloc;
  sol.total_cost = best_cost;
  double sum = 0.0;
  for (double p : best_alloc) sum += p;
  sol.balance_residual_kw = sum - inst.load_kw;
  sol.lambda_star = std::numeric_limits<double>::quiet_NaN();
  sol.committed = committed;
  return sol;
}

/// Max |marginal_cost - lambda*| over units strictly inside their bounds.
/// Zero (to tolerance) for any KKT-stationary allocation.
inline double kkt_stationarity_residual(const DispatchInstance& inst,
                                        const DispatchSolution& sol,
                                        double interior_margin_kw = 1e-7) {
  double worst = 0.0;
  for (std::size_t i = 0; i < inst.units.size(); ++i) {
    if (!sol.committed[i]) continue;
    const UnitBox& u = inst.units[i];
    const double p = sol.setpoints_kw[i];
    if (p <= u.lo_kw + interior_margin_kw || p >= u.hi_kw - interior_margin_kw)
      continue;
    worst = std::max(worst,
                     std::abs(marginal_cost(u.spec, p) - sol.lambda_star));
  }
  return worst;
}

/// Fleet-wide upper bound on marginal cost (Lipschitz constant for the
/// discretization error of the grid oracle).
inline double max_marginal_at_upper(const DispatchInstance& inst) {
  double m = 0.0;
  for (const UnitBox& u : inst.units)
    m = std::max(m, u.spec.committed
                        ? std::abs(marginal_cost(u.spec, u.hi_kw))
                        : 0.0);
  return m;
}

}  // namespace mdisp
