#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "isgd/errors.hpp"
#include "isgd/types.hpp"

namespace isgd {

/// Response column by header name or by 0-based field index.
using ResponseColumn = std::variant<std::string, std::size_t>;

struct CsvOptions {
  char delimiter = ',';
  bool has_header = true;
  /// Unset means every column is a covariate and outcomes read as zero.
  std::optional<ResponseColumn> response = ResponseColumn(std::string("y"));
};

/**
 * Reads a delimited text file chunk by chunk.
 *
 * At most `chunk_size` rows are held at once, so memory is
 * O(chunk_size * p) regardless of file length. Numbers are parsed with
 * std::from_chars and never depend on the process locale.
 */
class CsvSource {
 public:
  using Scalar = double;

  CsvSource(std::string path, Index chunk_size, CsvOptions options = {});

  void rewind();
  bool next_chunk(Chunk<double>& chunk);

  Index dimension() const noexcept { return dim_; }
  Index chunk_size() const noexcept { return chunk_size_; }
  const std::vector<std::string>& covariate_names() const noexcept { return names_; }
  const std::string& response_name() const noexcept { return response_name_; }
  const std::string& path() const noexcept { return path_; }
  bool has_response() const noexcept { return options_.response.has_value(); }

  /// Largest numeric chunk buffer handed out so far, in bytes.
  std::size_t chunk_bytes_high_water() const noexcept { return chunk_high_water_; }
  /// Largest line buffer capacity used so far, in bytes.
  std::size_t line_bytes_high_water() const noexcept { return line_high_water_; }

 private:
  bool read_line();
  void parse_header();

  std::string path_;
  Index chunk_size_;
  CsvOptions options_;
  std::ifstream in_;
  std::string line_;
  std::vector<std::string_view> fields_;
  std::int64_t line_no_ = 0;
  std::size_t n_fields_ = 0;
  std::size_t response_index_ = 0;
  Index dim_ = 0;
  std::vector<std::string> names_;
  std::string response_name_;
  std::size_t chunk_high_water_ = 0;
  std::size_t line_high_water_ = 0;
};

/// Serves an in-memory dataset with the same chunking as CsvSource.
class MemorySource {
 public:
  using Scalar = double;

  MemorySource(const Dataset<double>& data, Index chunk_size);

  void rewind() noexcept { cursor_ = 0; }
  bool next_chunk(Chunk<double>& chunk);
  Index dimension() const noexcept { return data_->dimension(); }

 private:
  const Dataset<double>* data_;
  Index chunk_size_;
  Index cursor_ = 0;
};

Dataset<double> read_csv(const std::string& path, const CsvOptions& options = {});

/// Covariates in order, then the response column named `response_name`.
/// Values use the shortest representation that round-trips exactly.
void write_csv(const std::string& path, const Dataset<double>& data,
               const std::string& response_name = "y", char delimiter = ',');

struct SimulatedDataset {
  Dataset<double> data;
  Vector<double> theta_star;
  double noise_scale = 1;  ///< k in y = x'theta* + k eps (lasso generator)
  std::string generator;
  std::uint64_t seed = 0;
  double rho = 0;
  double snr = 0;
};

/// Equicorrelated Gaussian design, theta*_j = (-1)^j exp(-2(j-1)/20),
/// noise scaled so Var(x'theta*) / k^2 = snr.
SimulatedDataset simulate_lasso(Index n, Index p, double rho, double snr, std::uint64_t seed);

/// X_ij ~ N(0, 1/N), ||theta*|| = 6 sqrt(p), noise from CN(0.05, 10).
SimulatedDataset simulate_huber(Index n, Index p, std::uint64_t seed);

/// Centers and scales every covariate column to unit sample variance.
void standardize_columns(Dataset<double>& data);

/// JSON with theta*, k, seed and generator parameters.
void write_sidecar(const std::string& path, const SimulatedDataset& sim);

}  // namespace isgd
