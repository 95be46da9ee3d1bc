#include "isgd/path.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace isgd {

void PathConfig::validate() const {
  if (n_lambda < 1) throw Error(ErrorKind::InvalidConfig, "n-lambda must be >= 1");
  if (!(lambda_min_ratio > 0 && lambda_min_ratio < 1)) {
    throw Error(ErrorKind::InvalidConfig, "lambda-min-ratio must lie in (0, 1)");
  }
  if (!(alpha >= 0 && alpha <= 1)) throw Error(ErrorKind::InvalidConfig, "alpha must lie in [0, 1]");
  if (lambda_max && !(*lambda_max > 0)) {
    throw Error(ErrorKind::InvalidConfig, "lambda-max must be positive");
  }
  if (parallel < 1) throw Error(ErrorKind::InvalidConfig, "parallel must be >= 1");
}

std::vector<double> lambda_grid(const DataSummary& summary, double alpha, const PathConfig& cfg) {
  cfg.validate();
  double lmax = 0;
  if (cfg.lambda_max) {
    lmax = *cfg.lambda_max;
  } else {
    if (alpha == 0) {
      throw Error(ErrorKind::InvalidConfig, "alpha = 0 needs an explicit lambda-max");
    }
    if (summary.n < 1) throw Error(ErrorKind::InvalidInput, "empty data summary");
    lmax = summary.xty.cwiseAbs().maxCoeff() / (double(summary.n) * alpha);
    if (!(lmax > 0)) throw Error(ErrorKind::InvalidInput, "X'y is zero; lambda-max undefined");
  }
  std::vector<double> grid(static_cast<std::size_t>(cfg.n_lambda));
  grid[0] = lmax;
  if (cfg.n_lambda > 1) {
    const double step = std::log(cfg.lambda_min_ratio) / double(cfg.n_lambda - 1);
    for (int k = 1; k < cfg.n_lambda - 1; ++k) grid[k] = lmax * std::exp(step * k);
    grid.back() = lmax * cfg.lambda_min_ratio;
  }
  return grid;
}

std::string format_path_table(const PathResult& path) {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "%6s  %14s  %-22s  %10s  %12s  %9s\n", "index", "lambda",
                "status", "updates", "norm", "converged");
  os << line;
  for (std::size_t k = 0; k < path.entries.size(); ++k) {
    const auto& e = path.entries[k];
    if (e.result) {
      std::snprintf(line, sizeof line, "%6zu  %14.6g  %-22s  %10lld  %12.6g  %9s\n", k, e.lambda,
                    e.status.c_str(), static_cast<long long>(e.result->updates),
                    e.result->estimate.norm(), e.result->converged ? "yes" : "no");
    } else {
      std::snprintf(line, sizeof line, "%6zu  %14.6g  %-22s  %10s  %12s  %9s\n", k, e.lambda,
                    e.status.c_str(), "-", "-", "-");
    }
    os << line;
  }
  return os.str();
}

}  // namespace isgd
