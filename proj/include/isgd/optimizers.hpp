#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "isgd/diagnostics.hpp"
#include "isgd/errors.hpp"
#include "isgd/implicit_solver.hpp"
#include "isgd/model.hpp"
#include "isgd/random.hpp"
#include "isgd/schedules.hpp"
#include "isgd/types.hpp"

namespace isgd {

enum class Method { Esgd, Isgd, Asgd, AiSgd, Momentum, Nag };

inline Method parse_method(std::string_view name) {
  if (name == "esgd" || name == "sgd") return Method::Esgd;
  if (name == "isgd" || name == "implicit") return Method::Isgd;
  if (name == "asgd") return Method::Asgd;
  if (name == "ai-sgd") return Method::AiSgd;
  if (name == "momentum") return Method::Momentum;
  if (name == "nag") return Method::Nag;
  throw Error(ErrorKind::InvalidConfig, "unknown method '" + std::string(name) + "'");
}

inline const char* to_string(Method m) noexcept {
  switch (m) {
    case Method::Esgd: return "esgd";
    case Method::Isgd: return "isgd";
    case Method::Asgd: return "asgd";
    case Method::AiSgd: return "ai-sgd";
    case Method::Momentum: return "momentum";
    case Method::Nag: return "nag";
  }
  return "unknown";
}

inline bool is_averaged(Method m) noexcept { return m == Method::Asgd || m == Method::AiSgd; }
inline bool is_implicit(Method m) noexcept { return m == Method::Isgd || m == Method::AiSgd; }

/// Iterates above this norm are treated as diverged.
inline constexpr double kDivergenceNorm = 1e10;

template <typename Scalar>
struct OptimizerState {
  Vector<Scalar> theta;
  Vector<Scalar> theta_bar;
  Vector<Scalar> velocity;
  std::int64_t n = 0;

  OptimizerState() = default;
  explicit OptimizerState(Index dim)
      : theta(Vector<Scalar>::Zero(dim)),
        theta_bar(Vector<Scalar>::Zero(dim)),
        velocity(Vector<Scalar>::Zero(dim)) {}
  explicit OptimizerState(Vector<Scalar> start)
      : theta(std::move(start)),
        theta_bar(Vector<Scalar>::Zero(theta.size())),
        velocity(Vector<Scalar>::Zero(theta.size())) {}
};

namespace detail {

template <typename Scalar>
void check_step_dims(const OptimizerState<Scalar>& state, const Vector<Scalar>& cond_diag,
                     const Observation<Scalar>& obs) {
  if (obs.x.size() != state.theta.size() || cond_diag.size() != state.theta.size()) {
    throw Error(ErrorKind::InvalidInput, "observation dimension does not match the iterate");
  }
}

template <typename Scalar>
void check_divergence(const OptimizerState<Scalar>& state) {
  const Scalar norm = state.theta.norm();
  if (!std::isfinite(norm) || norm > Scalar(kDivergenceNorm)) {
    throw DivergenceError(state.n, static_cast<double>(norm));
  }
}

/// C (lprime(x'point) x - lambda grad P(point)), the conditioned ascent
/// direction at `point`.
template <typename Scalar>
Vector<Scalar> conditioned_direction(const Objective<Scalar>& spec, const Vector<Scalar>& point,
                                     const Vector<Scalar>& cond_diag,
                                     const Observation<Scalar>& obs,
                                     const Penalty<Scalar>& pen) {
  const Scalar kappa = spec.lprime(obs.x.dot(point), obs.y);
  Vector<Scalar> dir = kappa * obs.x;
  if (pen.active()) dir -= penalty_gradient(pen, point);
  return cond_diag.cwiseProduct(dir);
}

}  // namespace detail

/// theta <- theta + gamma C (lprime(x'theta) x - lambda grad P(theta))
template <typename Scalar>
void explicit_step(OptimizerState<Scalar>& state, const Objective<Scalar>& spec, Scalar gamma,
                   const Vector<Scalar>& cond_diag, const Observation<Scalar>& obs,
                   const Penalty<Scalar>& pen) {
  detail::check_step_dims(state, cond_diag, obs);
  state.theta += gamma * detail::conditioned_direction(spec, state.theta, cond_diag, obs, pen);
  ++state.n;
  detail::check_divergence(state);
}

/// Implicit update with the penalty evaluated at the previous iterate.
template <typename Scalar>
ScaledGradientResult<Scalar> implicit_step(OptimizerState<Scalar>& state,
                                           const Objective<Scalar>& spec, Scalar gamma,
                                           const Vector<Scalar>& cond_diag,
                                           const Observation<Scalar>& obs,
                                           const Penalty<Scalar>& pen,
                                           const ImplicitConfig<Scalar>& cfg = {}) {
  detail::check_step_dims(state, cond_diag, obs);
  const auto res = detail::implicit_update_inplace(spec, gamma, state.theta, obs, cond_diag, pen, cfg);
  ++state.n;
  detail::check_divergence(state);
  return res;
}

/// Classical momentum: v <- mu v + gamma C grad(theta); theta <- theta + v.
template <typename Scalar>
void momentum_step(OptimizerState<Scalar>& state, const Objective<Scalar>& spec, Scalar gamma,
                   const Vector<Scalar>& cond_diag, const Observation<Scalar>& obs,
                   const Penalty<Scalar>& pen, Scalar mu) {
  detail::check_step_dims(state, cond_diag, obs);
  state.velocity = mu * state.velocity +
                   gamma * detail::conditioned_direction(spec, state.theta, cond_diag, obs, pen);
  state.theta += state.velocity;
  ++state.n;
  detail::check_divergence(state);
}

/// Nesterov: the gradient is taken at the look-ahead point theta + mu v.
template <typename Scalar>
void nag_step(OptimizerState<Scalar>& state, const Objective<Scalar>& spec, Scalar gamma,
              const Vector<Scalar>& cond_diag, const Observation<Scalar>& obs,
              const Penalty<Scalar>& pen, Scalar mu) {
  detail::check_step_dims(state, cond_diag, obs);
  const Vector<Scalar> lookahead = state.theta + mu * state.velocity;
  state.velocity = mu * state.velocity +
                   gamma * detail::conditioned_direction(spec, lookahead, cond_diag, obs, pen);
  state.theta += state.velocity;
  ++state.n;
  detail::check_divergence(state);
}

/// theta_bar_n = (n-1)/n theta_bar_{n-1} + theta_n / n.
template <typename Scalar>
void update_average(OptimizerState<Scalar>& state) {
  if (state.n < 1) throw Error(ErrorKind::InvalidInput, "update_average before any update");
  state.theta_bar += (state.theta - state.theta_bar) / Scalar(state.n);
}

template <typename Scalar>
struct FitConfig {
  Method method = Method::AiSgd;
  int passes = 1;
  Scalar momentum_mu = Scalar(0.9);
  bool shuffle = false;
  std::uint64_t seed = 0;
  std::optional<Vector<Scalar>> start;

  /// Convergence is reported only, unless stop_on_convergence is set.
  Scalar tol = Scalar(1e-5);
  int window = 10;
  bool stop_on_convergence = false;

  /// Record a trace entry every this many updates; 0 disables tracing.
  std::int64_t trace_every = 0;

  void validate() const {
    if (passes < 1) throw Error(ErrorKind::InvalidConfig, "passes must be >= 1");
    if (!(momentum_mu >= 0 && momentum_mu <= 1)) {
      throw Error(ErrorKind::InvalidConfig, "momentum must lie in [0, 1]");
    }
    if (!(tol > 0) || window < 1) {
      throw Error(ErrorKind::InvalidConfig, "convergence tol must be > 0 and window >= 1");
    }
    if (trace_every < 0) throw Error(ErrorKind::InvalidConfig, "trace interval must be >= 0");
  }
};

template <typename Scalar>
struct FitResult {
  Vector<Scalar> estimate;  ///< theta_bar for averaged methods, theta otherwise
  Vector<Scalar> last_iterate;
  std::int64_t updates = 0;
  bool converged = false;
  std::vector<TraceRecord> trace;
};

/// Optional observers. `on_update` sees every raw iterate theta_n.
template <typename Scalar>
struct FitHooks {
  std::function<void(std::int64_t, const Vector<Scalar>&)> on_update;
  std::string metric_name = "estimate_norm";
  std::function<double(const Vector<Scalar>&)> metric;
};

/// Anything that hands out chunks of observations and can start over.
template <typename S>
concept ChunkSource = requires(S s, Chunk<typename S::Scalar>& chunk) {
  s.rewind();
  { s.next_chunk(chunk) } -> std::same_as<bool>;
  { s.dimension() } -> std::convertible_to<Index>;
};

/**
 * Runs `cfg.method` over `cfg.passes` passes of `source`.
 *
 * Each pass rewinds the source and visits its chunks in order; with
 * `cfg.shuffle` the rows of every chunk are visited in a random order drawn
 * from the shuffle substream of `cfg.seed`. The learning rate and the
 * adaptive conditioner are indexed by the global update counter.
 */
template <ChunkSource Source, typename Scalar = typename Source::Scalar>
FitResult<Scalar> fit(Source& source, const Objective<Scalar>& spec,
                      const ScheduleConfig<Scalar>& schedule, const Penalty<Scalar>& pen,
                      const FitConfig<Scalar>& cfg, const ImplicitConfig<Scalar>& solver = {},
                      const FitHooks<Scalar>& hooks = {}) {
  cfg.validate();
  solver.validate();
  const Index p = source.dimension();
  if (cfg.start && cfg.start->size() != p) {
    throw Error(ErrorKind::InvalidInput, "start vector has the wrong dimension");
  }
  OptimizerState<Scalar> state = cfg.start ? OptimizerState<Scalar>(*cfg.start)
                                           : OptimizerState<Scalar>(p);
  const bool averaged = is_averaged(cfg.method);
  LearningRate<Scalar> rate(schedule, p, averaged);
  Rng rng = make_rng(cfg.seed, RngStream::Shuffle);
  ConvergenceMonitor monitor(static_cast<double>(cfg.tol), cfg.window);

  FitResult<Scalar> result;
  Vector<Scalar> prev_estimate = state.theta;
  Vector<Scalar> gradient(p);
  Chunk<Scalar> chunk;
  std::vector<Index> order;
  bool stop = false;

  auto current_estimate = [&]() -> const Vector<Scalar>& {
    return averaged ? state.theta_bar : state.theta;
  };

  for (int pass = 0; pass < cfg.passes && !stop; ++pass) {
    source.rewind();
    while (!stop && source.next_chunk(chunk)) {
      if (chunk.x.cols() != p) {
        throw Error(ErrorKind::Schema, "chunk dimension differs from the source dimension");
      }
      order.resize(static_cast<std::size_t>(chunk.rows()));
      std::iota(order.begin(), order.end(), Index(0));
      if (cfg.shuffle) std::shuffle(order.begin(), order.end(), rng);

      for (const Index i : order) {
        const Observation<Scalar> obs{chunk.x.row(i).transpose(), chunk.y(i)};
        const std::int64_t n = state.n + 1;
        const Scalar gamma = rate.gamma(n);

        const Vector<Scalar>* grad_ptr = nullptr;
        if (rate.needs_gradient()) {
          // Gradient of the log-likelihood at the point the step evaluates.
          const bool lookahead = cfg.method == Method::Nag;
          const Scalar eta = lookahead
                                 ? obs.x.dot(state.theta + cfg.momentum_mu * state.velocity)
                                 : obs.x.dot(state.theta);
          gradient = spec.lprime(eta, obs.y) * obs.x;
          grad_ptr = &gradient;
        }
        const Vector<Scalar>& cond = rate.conditioner(grad_ptr);

        switch (cfg.method) {
          case Method::Esgd:
          case Method::Asgd:
            explicit_step(state, spec, gamma, cond, obs, pen);
            break;
          case Method::Isgd:
          case Method::AiSgd:
            implicit_step(state, spec, gamma, cond, obs, pen, solver);
            break;
          case Method::Momentum:
            momentum_step(state, spec, gamma, cond, obs, pen, cfg.momentum_mu);
            break;
          case Method::Nag:
            nag_step(state, spec, gamma, cond, obs, pen, cfg.momentum_mu);
            break;
        }
        if (averaged) update_average(state);
        if (hooks.on_update) hooks.on_update(state.n, state.theta);

        const Vector<Scalar>& est = current_estimate();
        monitor.push(static_cast<double>(detail::relative_change(prev_estimate, est)));
        prev_estimate = est;

        if (cfg.trace_every > 0 && state.n % cfg.trace_every == 0) {
          const double value = hooks.metric ? hooks.metric(est) : static_cast<double>(est.norm());
          result.trace.push_back({state.n, hooks.metric_name, value});
        }
        if (cfg.stop_on_convergence && monitor.converged()) {
          stop = true;
          break;
        }
      }
    }
    if (pass == 0 && state.n == 0) throw Error(ErrorKind::InvalidInput, "empty data stream");
  }

  result.estimate = current_estimate();
  result.last_iterate = state.theta;
  result.updates = state.n;
  result.converged = monitor.converged() && result.estimate.allFinite();
  return result;
}

}  // namespace isgd
