#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <string_view>

#include "isgd/errors.hpp"
#include "isgd/types.hpp"

namespace isgd {

enum class ObjectiveKind { GlmGaussian, GlmBinomial, GlmPoisson, MEstHuber, MEstCustom };

/// Largest natural parameter for which the Poisson mean exp(eta) is
/// evaluated; beyond it lprime reports numeric overflow.
inline constexpr double kPoissonEtaCap = 700.0;

/**
 * A model that depends on the parameter only through eta = x'theta.
 *
 * The only hook the estimators need is lprime(eta; y), the derivative of the
 * log-likelihood (or negative loss) with respect to eta. Dispersion is fixed
 * to one; under canonical links it rescales the learning rate only.
 */
template <typename Scalar>
class Objective {
 public:
  using Derivative = std::function<Scalar(Scalar eta, Scalar y)>;

  static Objective gaussian() { return Objective(ObjectiveKind::GlmGaussian); }
  static Objective binomial() { return Objective(ObjectiveKind::GlmBinomial); }
  static Objective poisson() { return Objective(ObjectiveKind::GlmPoisson); }

  static Objective huber(Scalar delta) {
    if (!(delta > 0) || !std::isfinite(delta)) {
      throw Error(ErrorKind::InvalidConfig, "huber delta must be positive and finite");
    }
    Objective o(ObjectiveKind::MEstHuber);
    o.delta_ = delta;
    return o;
  }

  /// `derivative` must be nonincreasing in eta. This is checked on a grid only.
  static Objective custom(Derivative derivative) {
    if (!derivative) throw Error(ErrorKind::InvalidConfig, "empty derivative hook");
    Objective o(ObjectiveKind::MEstCustom);
    o.custom_ = std::move(derivative);
    o.check_sampled_monotonicity();
    return o;
  }

  ObjectiveKind kind() const noexcept { return kind_; }
  Scalar huber_delta() const noexcept { return delta_; }
  bool is_glm() const noexcept {
    return kind_ == ObjectiveKind::GlmGaussian || kind_ == ObjectiveKind::GlmBinomial ||
           kind_ == ObjectiveKind::GlmPoisson;
  }

  Scalar lprime(Scalar eta, Scalar y) const {
    if (!std::isfinite(eta) || !std::isfinite(y)) {
      throw Error(ErrorKind::InvalidInput, "lprime: non-finite eta or outcome");
    }
    switch (kind_) {
      case ObjectiveKind::GlmGaussian:
        return y - eta;
      case ObjectiveKind::GlmBinomial:
        if (y != Scalar(0) && y != Scalar(1)) {
          throw Error(ErrorKind::InvalidInput, "binomial outcome must be 0 or 1");
        }
        return y - sigmoid(eta);
      case ObjectiveKind::GlmPoisson:
        if (eta > Scalar(kPoissonEtaCap)) {
          throw Error(ErrorKind::NumericOverflow, "poisson mean exp(eta) overflows");
        }
        return y - std::exp(eta);
      case ObjectiveKind::MEstHuber: {
        const Scalar r = y - eta;
        return r > delta_ ? delta_ : (r < -delta_ ? -delta_ : r);
      }
      case ObjectiveKind::MEstCustom:
        return custom_(eta, y);
    }
    return Scalar(0);
  }

  Scalar transfer(Scalar eta) const {
    switch (kind_) {
      case ObjectiveKind::GlmGaussian: return eta;
      case ObjectiveKind::GlmBinomial: return sigmoid(eta);
      case ObjectiveKind::GlmPoisson: return std::exp(eta);
      default:
        throw Error(ErrorKind::UnsupportedOperation,
                    "transfer function is defined for GLM families only");
    }
  }

  static Scalar sigmoid(Scalar eta) {
    // Branches keep exp() from overflowing for large |eta|.
    if (eta >= 0) return Scalar(1) / (Scalar(1) + std::exp(-eta));
    const Scalar e = std::exp(eta);
    return e / (Scalar(1) + e);
  }

 private:
  explicit Objective(ObjectiveKind kind) : kind_(kind) {}

  void check_sampled_monotonicity() const {
    for (Scalar y : {Scalar(-1), Scalar(0), Scalar(1)}) {
      Scalar prev = custom_(Scalar(-10), y);
      for (int i = 1; i <= 200; ++i) {
        const Scalar eta = Scalar(-10) + Scalar(i) * Scalar(0.1);
        const Scalar cur = custom_(eta, y);
        if (cur > prev) {
          throw Error(ErrorKind::InvalidConfig,
                      "custom derivative is increasing in eta at a sampled point");
        }
        prev = cur;
      }
    }
  }

  ObjectiveKind kind_;
  Scalar delta_ = std::numeric_limits<Scalar>::infinity();
  Derivative custom_;
};

/// Parses the CLI model names: gaussian, binomial, poisson, huber.
template <typename Scalar>
Objective<Scalar> objective_from_name(std::string_view name, Scalar huber_delta) {
  if (name == "gaussian") return Objective<Scalar>::gaussian();
  if (name == "binomial") return Objective<Scalar>::binomial();
  if (name == "poisson") return Objective<Scalar>::poisson();
  if (name == "huber") return Objective<Scalar>::huber(huber_delta);
  throw Error(ErrorKind::InvalidConfig, "unknown model '" + std::string(name) + "'");
}

inline const char* to_string(ObjectiveKind kind) noexcept {
  switch (kind) {
    case ObjectiveKind::GlmGaussian: return "gaussian";
    case ObjectiveKind::GlmBinomial: return "binomial";
    case ObjectiveKind::GlmPoisson: return "poisson";
    case ObjectiveKind::MEstHuber: return "huber";
    case ObjectiveKind::MEstCustom: return "custom";
  }
  return "unknown";
}

// Free-function spellings, convenient in generic code.
template <typename Scalar>
Scalar lprime(const Objective<Scalar>& spec, Scalar eta, Scalar y) {
  return spec.lprime(eta, y);
}

template <typename Scalar>
Scalar transfer(const Objective<Scalar>& spec, Scalar eta) {
  return spec.transfer(eta);
}

/// Elastic net: lambda * [(1 - alpha)/2 ||theta||^2 + alpha ||theta||_1].
template <typename Scalar>
struct Penalty {
  Scalar alpha = 0;
  Scalar lambda = 0;

  Penalty() = default;
  Penalty(Scalar alpha_, Scalar lambda_) : alpha(alpha_), lambda(lambda_) {
    if (!(alpha >= 0 && alpha <= 1)) {
      throw Error(ErrorKind::InvalidConfig, "elastic-net alpha must lie in [0, 1]");
    }
    if (!(lambda >= 0) || !std::isfinite(lambda)) {
      throw Error(ErrorKind::InvalidConfig, "penalty lambda must be finite and >= 0");
    }
  }

  bool active() const noexcept { return lambda != Scalar(0); }
};

namespace detail {
template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& v, const char* what) {
  if (!v.allFinite()) throw Error(ErrorKind::InvalidInput, what);
}
}  // namespace detail

template <typename Scalar, typename Derived>
Scalar penalty_value(const Penalty<Scalar>& pen, const Eigen::MatrixBase<Derived>& theta) {
  detail::require_finite(theta, "penalty_value: non-finite theta");
  if (!pen.active()) return Scalar(0);
  return pen.lambda * ((Scalar(1) - pen.alpha) * Scalar(0.5) * theta.squaredNorm() +
                       pen.alpha * theta.template lpNorm<1>());
}

/// lambda * [(1 - alpha) theta + alpha sign(theta)], with sign(0) = 0.
template <typename Scalar, typename Derived>
Vector<Scalar> penalty_gradient(const Penalty<Scalar>& pen,
                                const Eigen::MatrixBase<Derived>& theta) {
  detail::require_finite(theta, "penalty_gradient: non-finite theta");
  if (!pen.active()) return Vector<Scalar>::Zero(theta.size());
  const auto sign = theta.unaryExpr([](Scalar t) {
    return t > 0 ? Scalar(1) : (t < 0 ? Scalar(-1) : Scalar(0));
  });
  return pen.lambda * ((Scalar(1) - pen.alpha) * theta + pen.alpha * sign);
}

}  // namespace isgd
