#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "isgd/errors.hpp"
#include "isgd/model.hpp"
#include "isgd/types.hpp"

namespace isgd {

struct TraceRecord {
  std::int64_t update_index = 0;
  std::string metric_name;
  double value = 0;
};

/// Mean response h(x'theta) for GLMs; the linear predictor for M-estimators.
template <typename Scalar, typename Derived>
Scalar predict(const Objective<Scalar>& spec, const Vector<Scalar>& theta,
               const Eigen::MatrixBase<Derived>& x) {
  if (x.size() != theta.size()) {
    throw Error(ErrorKind::InvalidInput, "predict: dimension mismatch");
  }
  const Scalar eta = x.dot(theta);
  return spec.is_glm() ? spec.transfer(eta) : eta;
}

/// (1/p) ||theta_hat - theta_star||^2
template <typename Scalar>
Scalar mse_to_truth(const Vector<Scalar>& theta_hat, const Vector<Scalar>& theta_star) {
  if (theta_hat.size() != theta_star.size() || theta_hat.size() == 0) {
    throw Error(ErrorKind::InvalidInput, "mse_to_truth: length mismatch");
  }
  return (theta_hat - theta_star).squaredNorm() / Scalar(theta_hat.size());
}

/// Fraction of rows where the 0.5-thresholded prediction disagrees with y.
template <typename Scalar>
Scalar classification_error(const Objective<Scalar>& spec, const Vector<Scalar>& theta,
                            const Dataset<Scalar>& test) {
  if (spec.kind() != ObjectiveKind::GlmBinomial) {
    throw Error(ErrorKind::UnsupportedOperation,
                "classification error needs a binomial model");
  }
  if (test.rows() == 0) throw Error(ErrorKind::InvalidInput, "empty test set");
  if (test.dimension() != theta.size()) {
    throw Error(ErrorKind::InvalidInput, "classification_error: dimension mismatch");
  }
  Index wrong = 0;
  for (Index i = 0; i < test.rows(); ++i) {
    const bool positive = spec.transfer(test.x.row(i).dot(theta)) >= Scalar(0.5);
    wrong += positive != (test.y(i) == Scalar(1));
  }
  return Scalar(wrong) / Scalar(test.rows());
}

namespace detail {
template <typename Scalar>
Scalar relative_change(const Vector<Scalar>& prev, const Vector<Scalar>& cur) {
  return (cur - prev).norm() / std::max(Scalar(1), cur.norm());
}
}  // namespace detail

/// True when each of the last `window` steps moved the iterate by less than
/// tol relative to max(1, ||theta_n||). Needs window + 1 iterates.
template <typename Scalar>
bool convergence_check(std::span<const Vector<Scalar>> history, Scalar tol, int window) {
  if (window < 1) throw Error(ErrorKind::InvalidInput, "convergence window must be >= 1");
  if (history.size() < static_cast<std::size_t>(window) + 1) return false;
  for (std::size_t i = history.size() - window; i < history.size(); ++i) {
    if (!(detail::relative_change(history[i - 1], history[i]) < tol)) return false;
  }
  return true;
}

/// Streaming form of convergence_check: O(window) memory of step sizes.
class ConvergenceMonitor {
 public:
  ConvergenceMonitor(double tol, int window) : tol_(tol), changes_(std::max(window, 1), 0.0) {
    if (window < 1) throw Error(ErrorKind::InvalidInput, "convergence window must be >= 1");
  }

  void push(double relative_change) {
    changes_[next_] = relative_change;
    next_ = (next_ + 1) % changes_.size();
    if (count_ < changes_.size()) ++count_;
  }

  bool converged() const {
    if (count_ < changes_.size()) return false;
    return std::all_of(changes_.begin(), changes_.end(), [&](double c) { return c < tol_; });
  }

 private:
  double tol_;
  std::vector<double> changes_;
  std::size_t next_ = 0;
  std::size_t count_ = 0;
};

/// Writes update_index,metric,value rows.
void write_trace_csv(const std::string& path, const std::vector<TraceRecord>& trace);

}  // namespace isgd
