#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "isgd/errors.hpp"
#include "isgd/types.hpp"

namespace isgd {

/// gamma_n = gamma0 (1 + a gamma0 n)^(-c); the conditioner is the identity.
template <typename Scalar>
struct OneDimSchedule {
  Scalar gamma0 = 1;
  Scalar a = 1;
  Scalar c = 1;

  void validate() const {
    if (!(gamma0 > 0) || !(a > 0) || !(c > 0 && c <= 1)) {
      throw Error(ErrorKind::InvalidConfig,
                  "one-dimensional rate needs gamma0 > 0, a > 0, c in (0, 1]");
    }
  }
};

/// n = 0 yields gamma0.
template <typename Scalar>
Scalar onedim_rate(const OneDimSchedule<Scalar>& s, std::int64_t n) {
  return s.gamma0 * std::pow(Scalar(1) + s.a * s.gamma0 * Scalar(n), -s.c);
}

enum class AdaptiveKind { AdaGrad, RMSProp, Fisher };

template <typename Scalar>
struct StepSize {
  Scalar gamma = 1;
  Vector<Scalar> cond_diag;
};

/// Diagonal curvature accumulator shared by the three adaptive schedules.
template <typename Scalar>
struct AdaptiveState {
  AdaptiveKind kind = AdaptiveKind::AdaGrad;
  Scalar eta = 1;
  Scalar epsilon = Scalar(1e-6);
  Scalar beta = Scalar(0.9);
  Vector<Scalar> accumulator;
  std::int64_t n = 0;

  AdaptiveState() = default;
  AdaptiveState(AdaptiveKind kind_, Index dim, Scalar eta_ = 1, Scalar epsilon_ = Scalar(1e-6),
                Scalar beta_ = Scalar(0.9))
      : kind(kind_),
        eta(eta_),
        epsilon(epsilon_),
        beta(beta_),
        accumulator(Vector<Scalar>::Zero(dim)) {
    if (!(eta > 0) || !(epsilon >= 0) || !(beta >= 0 && beta <= 1)) {
      throw Error(ErrorKind::InvalidConfig,
                  "adaptive schedule needs eta > 0, epsilon >= 0, beta in [0, 1]");
    }
  }
};

namespace detail {

template <typename Scalar>
void check_adaptive(const AdaptiveState<Scalar>& state, AdaptiveKind expected,
                    const Vector<Scalar>& gradient) {
  if (state.kind != expected) {
    throw Error(ErrorKind::InvalidConfig, "adaptive step called for the wrong schedule kind");
  }
  if (gradient.size() != state.accumulator.size()) {
    throw Error(ErrorKind::InvalidInput, "gradient dimension does not match accumulator");
  }
  if (!gradient.allFinite()) {
    throw Error(ErrorKind::InvalidInput, "non-finite gradient passed to adaptive schedule");
  }
}

template <typename Scalar>
StepSize<Scalar> inverse_sqrt_conditioner(const AdaptiveState<Scalar>& state) {
  return {Scalar(1),
          state.eta * (state.accumulator.array() + state.epsilon).rsqrt().matrix()};
}

}  // namespace detail

template <typename Scalar>
StepSize<Scalar> adagrad_step(AdaptiveState<Scalar>& state, const Vector<Scalar>& gradient) {
  detail::check_adaptive(state, AdaptiveKind::AdaGrad, gradient);
  state.accumulator += gradient.cwiseAbs2();
  ++state.n;
  return detail::inverse_sqrt_conditioner(state);
}

template <typename Scalar>
StepSize<Scalar> rmsprop_step(AdaptiveState<Scalar>& state, const Vector<Scalar>& gradient) {
  detail::check_adaptive(state, AdaptiveKind::RMSProp, gradient);
  state.accumulator = state.beta * state.accumulator + (Scalar(1) - state.beta) * gradient.cwiseAbs2();
  ++state.n;
  return detail::inverse_sqrt_conditioner(state);
}

/// Running mean of squared gradients (weight 1/n); conditioner (I + eps)^-1.
template <typename Scalar>
StepSize<Scalar> fisher_step(AdaptiveState<Scalar>& state, const Vector<Scalar>& gradient) {
  detail::check_adaptive(state, AdaptiveKind::Fisher, gradient);
  ++state.n;
  const Scalar w = Scalar(1) / Scalar(state.n);
  state.accumulator = (Scalar(1) - w) * state.accumulator + w * gradient.cwiseAbs2();
  return {Scalar(1), (state.accumulator.array() + state.epsilon).inverse().matrix()};
}

template <typename Scalar>
StepSize<Scalar> adaptive_step(AdaptiveState<Scalar>& state, const Vector<Scalar>& gradient) {
  switch (state.kind) {
    case AdaptiveKind::AdaGrad: return adagrad_step(state, gradient);
    case AdaptiveKind::RMSProp: return rmsprop_step(state, gradient);
    case AdaptiveKind::Fisher: return fisher_step(state, gradient);
  }
  throw Error(ErrorKind::InvalidConfig, "unknown adaptive schedule");
}

/// Schedule selection as exposed on the command line.
template <typename Scalar>
struct ScheduleConfig {
  enum class Kind { OneDim, AdaGrad, RMSProp, Fisher };

  Kind kind = Kind::OneDim;
  Scalar gamma0 = 1;
  Scalar a = 1;
  /// Unset means 1 for unaveraged methods and 2/3 for averaged ones.
  std::optional<Scalar> c;
  Scalar eta = 1;
  Scalar epsilon = Scalar(1e-6);
  Scalar beta = Scalar(0.9);

  static Kind parse_kind(std::string_view name) {
    if (name == "onedim") return Kind::OneDim;
    if (name == "adagrad") return Kind::AdaGrad;
    if (name == "rmsprop") return Kind::RMSProp;
    if (name == "fisher") return Kind::Fisher;
    throw Error(ErrorKind::InvalidConfig, "unknown learning rate '" + std::string(name) + "'");
  }
};

inline const char* to_string(ScheduleConfig<double>::Kind kind) noexcept {
  using Kind = ScheduleConfig<double>::Kind;
  switch (kind) {
    case Kind::OneDim: return "onedim";
    case Kind::AdaGrad: return "adagrad";
    case Kind::RMSProp: return "rmsprop";
    case Kind::Fisher: return "fisher";
  }
  return "unknown";
}

/// Per-fit learning-rate generator: either a scalar sequence with identity
/// conditioner or an adaptive diagonal conditioner with gamma fixed at 1.
template <typename Scalar>
class LearningRate {
 public:
  LearningRate(const ScheduleConfig<Scalar>& cfg, Index dim, bool averaged) {
    using Kind = typename ScheduleConfig<Scalar>::Kind;
    if (cfg.kind == Kind::OneDim) {
      OneDimSchedule<Scalar> s{cfg.gamma0, cfg.a,
                               cfg.c.value_or(averaged ? Scalar(2) / Scalar(3) : Scalar(1))};
      s.validate();
      impl_ = s;
      identity_ = Vector<Scalar>::Ones(dim);
    } else {
      const AdaptiveKind kind = cfg.kind == Kind::AdaGrad   ? AdaptiveKind::AdaGrad
                                : cfg.kind == Kind::RMSProp ? AdaptiveKind::RMSProp
                                                            : AdaptiveKind::Fisher;
      impl_ = AdaptiveState<Scalar>(kind, dim, cfg.eta, cfg.epsilon, cfg.beta);
    }
  }

  /// Adaptive schedules need the gradient at the previous iterate.
  bool needs_gradient() const noexcept {
    return std::holds_alternative<AdaptiveState<Scalar>>(impl_);
  }

  /// Rate for update n (1-based).
  Scalar gamma(std::int64_t n) const {
    if (const auto* s = std::get_if<OneDimSchedule<Scalar>>(&impl_)) return onedim_rate(*s, n);
    return Scalar(1);
  }

  /// Advances the adaptive state and returns the conditioner for this update.
  const Vector<Scalar>& conditioner(const Vector<Scalar>* gradient) {
    if (auto* a = std::get_if<AdaptiveState<Scalar>>(&impl_)) {
      if (!gradient) throw Error(ErrorKind::InvalidInput, "adaptive schedule needs a gradient");
      cond_ = adaptive_step(*a, *gradient).cond_diag;
      return cond_;
    }
    return identity_;
  }

  const std::variant<OneDimSchedule<Scalar>, AdaptiveState<Scalar>>& state() const noexcept {
    return impl_;
  }

 private:
  std::variant<OneDimSchedule<Scalar>, AdaptiveState<Scalar>> impl_;
  Vector<Scalar> identity_;
  Vector<Scalar> cond_;
};

}  // namespace isgd
