#pragma once

#include <atomic>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "isgd/errors.hpp"
#include "isgd/optimizers.hpp"

namespace isgd {

struct PathConfig {
  int n_lambda = 100;
  double lambda_min_ratio = 1e-3;
  double alpha = 1;
  bool warm_start = true;
  /// Required when alpha == 0.
  std::optional<double> lambda_max;
  /// Worker threads for cold-start paths.
  int parallel = 1;

  void validate() const;
};

/// Sufficient statistics for the lambda grid: N and X'y.
struct DataSummary {
  Index n = 0;
  Vector<double> xty;
};

template <ChunkSource Source>
DataSummary summarize(Source& source) {
  DataSummary s;
  s.xty = Vector<double>::Zero(source.dimension());
  Chunk<double> chunk;
  source.rewind();
  while (source.next_chunk(chunk)) {
    s.xty.noalias() += chunk.x.transpose() * chunk.y;
    s.n += chunk.rows();
  }
  source.rewind();
  if (s.n == 0) throw Error(ErrorKind::InvalidInput, "empty data stream");
  return s;
}

/// Log-spaced decreasing grid from lambda_max = max_j |sum_n x_nj y_n| / (N alpha)
/// down to lambda_max * lambda_min_ratio.
std::vector<double> lambda_grid(const DataSummary& summary, double alpha, const PathConfig& cfg);

struct PathEntry {
  double lambda = 0;
  std::string status = "ok";  ///< "ok" or the error kind
  std::string message;
  std::optional<FitResult<double>> result;
};

struct PathResult {
  std::vector<double> grid;
  std::vector<PathEntry> entries;
};

/// Aligned-column summary, one row per lambda.
std::string format_path_table(const PathResult& path);

/**
 * Fits every lambda of the grid in decreasing order.
 *
 * `make_source` returns a fresh source each call; cold-start paths with
 * parallel > 1 give every worker its own. A failing lambda is recorded in its
 * entry and the path continues.
 */
template <typename Factory>
PathResult run_path(Factory make_source, const Objective<double>& spec,
                    const ScheduleConfig<double>& schedule, const PathConfig& cfg,
                    const FitConfig<double>& fit_cfg, const ImplicitConfig<double>& solver = {}) {
  cfg.validate();
  PathResult out;
  {
    auto source = make_source();
    const DataSummary summary = summarize(source);
    out.grid = lambda_grid(summary, cfg.alpha, cfg);
  }
  out.entries.resize(out.grid.size());

  auto fit_one = [&](std::size_t k, const std::optional<Vector<double>>& start) {
    PathEntry& entry = out.entries[k];
    entry.lambda = out.grid[k];
    FitConfig<double> fc = fit_cfg;
    if (start) fc.start = start;
    try {
      auto source = make_source();
      entry.result = fit(source, spec, schedule, Penalty<double>(cfg.alpha, out.grid[k]), fc,
                         solver);
    } catch (const Error& e) {
      entry.status = to_string(e.kind());
      entry.message = e.what();
    }
  };

  if (cfg.warm_start) {
    std::optional<Vector<double>> start = fit_cfg.start;
    for (std::size_t k = 0; k < out.grid.size(); ++k) {
      fit_one(k, start);
      if (out.entries[k].result) start = out.entries[k].result->estimate;
    }
  } else if (cfg.parallel <= 1) {
    for (std::size_t k = 0; k < out.grid.size(); ++k) fit_one(k, fit_cfg.start);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    for (int w = 0; w < cfg.parallel; ++w) {
      workers.emplace_back([&] {
        for (std::size_t k = next++; k < out.grid.size(); k = next++) fit_one(k, fit_cfg.start);
      });
    }
    for (auto& t : workers) t.join();
  }
  return out;
}

}  // namespace isgd
