#pragma once

#include <algorithm>
#include <cmath>
#include <optional>

#include "isgd/errors.hpp"
#include "isgd/model.hpp"
#include "isgd/types.hpp"

namespace isgd {

template <typename Scalar>
struct ImplicitConfig {
  Scalar root_tolerance = Scalar(1e-10);
  int max_root_iterations = 200;

  void validate() const {
    if (!(root_tolerance > 0)) {
      throw Error(ErrorKind::InvalidConfig, "root tolerance must be positive");
    }
    if (max_root_iterations < 1) {
      throw Error(ErrorKind::InvalidConfig, "max root iterations must be >= 1");
    }
  }
};

template <typename Scalar>
struct ScaledGradientResult {
  Scalar xi = 0;          ///< gamma * s * kappa_prev, the solved fixed point
  Scalar scale = 0;       ///< s; zero by convention when kappa_prev == 0
  Scalar eta_prev = 0;    ///< x' theta_prev
  Scalar kappa_prev = 0;  ///< lprime at eta_prev
};

template <typename Scalar>
struct Bracket {
  Scalar lo = 0;
  Scalar hi = 0;
};

/// Interval between zero and the (penalty-shifted) explicit step r.
template <typename Scalar>
Bracket<Scalar> search_bracket(Scalar r_shifted) {
  if (!std::isfinite(r_shifted)) {
    throw Error(ErrorKind::InvalidInput, "search_bracket: non-finite endpoint");
  }
  if (r_shifted >= 0) return {Scalar(0), r_shifted};
  return {r_shifted, Scalar(0)};
}

namespace detail {

/// Scalar core shared by solve_scale and implicit_update.
///
/// Solves xi = gamma * lprime(base + xi * q; y) for xi, where base is the
/// penalty-shifted natural parameter. The map xi -> gamma * lprime(...) is
/// nonincreasing because lprime is nonincreasing and q >= 0, so
/// f(xi) = gamma * lprime(base + xi * q) - xi is strictly decreasing and has
/// its root between 0 and f(0).
template <typename Scalar>
Scalar solve_fixed_point(const Objective<Scalar>& spec, Scalar gamma, Scalar base, Scalar q,
                         Scalar y, const ImplicitConfig<Scalar>& cfg) {
  const Scalar r = gamma * spec.lprime(base, y);
  const Bracket<Scalar> bracket = search_bracket(r);
  if (r == Scalar(0)) return Scalar(0);
  if (q == Scalar(0)) return r;

  // nullopt marks an overflowing evaluation; overflow only happens for
  // extreme eta, where a nonincreasing lprime is very negative.
  auto f = [&](Scalar xi) -> std::optional<Scalar> {
    try {
      return gamma * spec.lprime(base + xi * q, y) - xi;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NumericOverflow) throw;
      return std::nullopt;
    }
  };

  const Scalar sign = r > 0 ? Scalar(1) : Scalar(-1);
  Scalar inner = 0;
  Scalar f_inner = r;
  Scalar outer = r > 0 ? bracket.hi : bracket.lo;
  std::optional<Scalar> f_outer = f(outer);

  if (!f_outer) {
    // Pull the far endpoint in geometrically until it evaluates.
    Scalar overflowed = outer;
    for (int k = 0; k < 64 && !f_outer; ++k) {
      const Scalar trial = inner + (overflowed - inner) / 2;
      const auto ft = f(trial);
      if (!ft) {
        overflowed = trial;
      } else if (sign * *ft > 0) {
        // Root lies between trial and the last overflowing point.
        inner = trial;
        f_inner = *ft;
        outer = overflowed;
        break;
      } else {
        outer = trial;
        f_outer = ft;
      }
    }
    if (!f_outer && outer != overflowed) {
      throw Error(ErrorKind::SolverFailure, "implicit solve: endpoint overflow not resolved");
    }
  } else if (sign * *f_outer > 0) {
    // Only a non-monotone user derivative can land here. Widen before failing.
    bool found = false;
    for (int k = 0; k < 30; ++k) {
      outer *= 2;
      f_outer = f(outer);
      if (!f_outer || sign * *f_outer <= 0) {
        found = true;
        break;
      }
    }
    if (!found) {
      throw Error(ErrorKind::SolverFailure,
                  "implicit solve: bracket has no sign change (non-monotone derivative?)");
    }
  }
  if (f_outer && *f_outer == Scalar(0)) return outer;

  Scalar best = std::abs(f_inner) <= (f_outer ? std::abs(*f_outer) : std::abs(f_inner))
                    ? inner
                    : outer;
  Scalar best_residual = std::abs(best == inner ? f_inner : *f_outer);

  for (int it = 0; it < cfg.max_root_iterations; ++it) {
    const Scalar mid = inner + (outer - inner) / 2;
    if (mid == inner || mid == outer) return best;  // bracket exhausted

    const auto fm = f(mid);
    if (fm && std::abs(*fm) < best_residual) {
      best = mid;
      best_residual = std::abs(*fm);
    }
    if (!fm || sign * *fm < 0) {
      outer = mid;
      f_outer = fm;
    } else {
      inner = mid;
      f_inner = *fm;
    }

    if (best_residual <= cfg.root_tolerance) {
      // One secant step across the final bracket removes the bisection
      // error for locally linear maps.
      if (f_outer && *f_outer != f_inner) {
        Scalar secant = inner - f_inner * (outer - inner) / (*f_outer - f_inner);
        const Scalar lo = std::min(inner, outer);
        const Scalar hi = std::max(inner, outer);
        secant = std::clamp(secant, lo, hi);
        const auto fs = f(secant);
        if (fs && std::abs(*fs) <= best_residual) best = secant;
      }
      return best;
    }
  }
  throw ConvergenceError("implicit solve: max root iterations exceeded",
                         static_cast<double>(best));
}

template <typename Scalar>
struct ImplicitTerms {
  Scalar eta_prev;
  Scalar kappa_prev;
  Scalar shift;  ///< -gamma * lambda * x' C grad P(theta_prev)
  Scalar q;      ///< x' C x
};

template <typename Scalar>
ImplicitTerms<Scalar> implicit_terms(const Objective<Scalar>& spec, Scalar gamma,
                                     const Vector<Scalar>& theta_prev,
                                     const Observation<Scalar>& obs,
                                     const Vector<Scalar>& cond_diag,
                                     const Vector<Scalar>* pen_grad) {
  ImplicitTerms<Scalar> t;
  t.eta_prev = obs.x.dot(theta_prev);
  t.kappa_prev = spec.lprime(t.eta_prev, obs.y);
  t.q = obs.x.cwiseAbs2().dot(cond_diag);
  t.shift = pen_grad ? -gamma * obs.x.dot(cond_diag.cwiseProduct(*pen_grad)) : Scalar(0);
  return t;
}

template <typename Scalar>
void check_implicit_args(Scalar gamma, const Vector<Scalar>& theta_prev,
                         const Observation<Scalar>& obs, const Vector<Scalar>& cond_diag) {
  if (!(gamma > 0) || !std::isfinite(gamma)) {
    throw Error(ErrorKind::InvalidInput, "learning rate must be positive and finite");
  }
  if (obs.x.size() != theta_prev.size() || cond_diag.size() != theta_prev.size()) {
    throw Error(ErrorKind::InvalidInput, "dimension mismatch in implicit update");
  }
  if (!(cond_diag.array() > 0).all()) {
    throw Error(ErrorKind::InvalidInput, "conditioner entries must be positive");
  }
}

/// Implicit update written into `theta`; returns the solved scale.
template <typename Scalar>
ScaledGradientResult<Scalar> implicit_update_inplace(const Objective<Scalar>& spec,
                                                     Scalar gamma, Vector<Scalar>& theta,
                                                     const Observation<Scalar>& obs,
                                                     const Vector<Scalar>& cond_diag,
                                                     const Penalty<Scalar>& pen,
                                                     const ImplicitConfig<Scalar>& cfg) {
  check_implicit_args(gamma, theta, obs, cond_diag);
  std::optional<Vector<Scalar>> pen_grad;
  if (pen.active()) pen_grad = penalty_gradient(pen, theta);
  const auto t = implicit_terms(spec, gamma, theta, obs, cond_diag,
                                pen_grad ? &*pen_grad : nullptr);

  ScaledGradientResult<Scalar> res;
  res.eta_prev = t.eta_prev;
  res.kappa_prev = t.kappa_prev;
  if (t.kappa_prev != Scalar(0)) {
    res.xi = solve_fixed_point(spec, gamma, t.eta_prev + t.shift, t.q, obs.y, cfg);
    res.scale = res.xi / (gamma * t.kappa_prev);
  }
  if (res.xi != Scalar(0)) theta.noalias() += res.xi * cond_diag.cwiseProduct(obs.x);
  if (pen_grad) theta.noalias() -= gamma * cond_diag.cwiseProduct(*pen_grad);
  return res;
}

}  // namespace detail

/// Solves for the scale s such that the gradient at the implicit iterate is
/// s times the gradient at theta_prev (penalty applied at theta_prev).
template <typename Scalar>
ScaledGradientResult<Scalar> solve_scale(const Objective<Scalar>& spec, Scalar gamma,
                                         const Vector<Scalar>& theta_prev,
                                         const Observation<Scalar>& obs,
                                         const Vector<Scalar>& cond_diag,
                                         const Penalty<Scalar>& pen,
                                         const ImplicitConfig<Scalar>& cfg = {}) {
  detail::check_implicit_args(gamma, theta_prev, obs, cond_diag);
  std::optional<Vector<Scalar>> pen_grad;
  if (pen.active()) pen_grad = penalty_gradient(pen, theta_prev);
  const auto t = detail::implicit_terms(spec, gamma, theta_prev, obs, cond_diag,
                                        pen_grad ? &*pen_grad : nullptr);
  ScaledGradientResult<Scalar> res;
  res.eta_prev = t.eta_prev;
  res.kappa_prev = t.kappa_prev;
  if (t.kappa_prev != Scalar(0)) {
    res.xi = detail::solve_fixed_point(spec, gamma, t.eta_prev + t.shift, t.q, obs.y, cfg);
    res.scale = res.xi / (gamma * t.kappa_prev);
  }
  return res;
}

/// theta_prev + gamma C (s kappa_prev x - lambda grad P(theta_prev)).
template <typename Scalar>
Vector<Scalar> implicit_update(const Objective<Scalar>& spec, Scalar gamma,
                               const Vector<Scalar>& theta_prev,
                               const Observation<Scalar>& obs,
                               const Vector<Scalar>& cond_diag, const Penalty<Scalar>& pen,
                               const ImplicitConfig<Scalar>& cfg = {}) {
  Vector<Scalar> theta = theta_prev;
  detail::implicit_update_inplace(spec, gamma, theta, obs, cond_diag, pen, cfg);
  return theta;
}

}  // namespace isgd
