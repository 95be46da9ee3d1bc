#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

namespace isgd {

using Index = Eigen::Index;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Row-major so that each observation is a contiguous row.
template <typename Scalar>
using RowMatrix =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// One streamed data point. Does not own the covariates.
template <typename Scalar>
struct Observation {
  Eigen::Ref<const Vector<Scalar>> x;
  Scalar y;
};

/// Rows of covariates with their outcomes.
template <typename Scalar>
struct Dataset {
  RowMatrix<Scalar> x;
  Vector<Scalar> y;
  std::vector<std::string> covariate_names;

  Index rows() const noexcept { return y.size(); }
  Index dimension() const noexcept { return x.cols(); }
  Observation<Scalar> observation(Index i) const { return {x.row(i).transpose(), y(i)}; }
};

/// A block of consecutive rows handed out by a streaming source.
template <typename Scalar>
struct Chunk {
  RowMatrix<Scalar> x;
  Vector<Scalar> y;

  Index rows() const noexcept { return y.size(); }
};

}  // namespace isgd
