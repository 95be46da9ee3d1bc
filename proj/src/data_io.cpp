#include "isgd/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <random>

#include <json.hpp>

#include "isgd/errors.hpp"
#include "isgd/random.hpp"

namespace isgd {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

void split(std::string_view line, char delim, std::vector<std::string_view>& out) {
  out.clear();
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      return;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
}

double parse_double(std::string_view field, std::int64_t line_no) {
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double value = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
    throw ParseError(line_no, "cannot parse '" + std::string(field) + "' as a number");
  }
  if (!std::isfinite(value)) throw ParseError(line_no, "non-finite value");
  return value;
}

std::string unquote(std::string_view s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return std::string(s);
}

void append_number(std::string& out, double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, ptr);
}

}  // namespace

CsvSource::CsvSource(std::string path, Index chunk_size, CsvOptions options)
    : path_(std::move(path)), chunk_size_(chunk_size), options_(std::move(options)) {
  if (chunk_size_ < 1) throw Error(ErrorKind::InvalidConfig, "chunk size must be >= 1");
  in_.open(path_, std::ios::binary);
  if (!in_) throw Error(ErrorKind::InvalidInput, "cannot open data file '" + path_ + "'");
  parse_header();
}

bool CsvSource::read_line() {
  while (std::getline(in_, line_)) {
    ++line_no_;
    line_high_water_ = std::max(line_high_water_, line_.capacity());
    if (!trim(line_).empty()) return true;
  }
  return false;
}

void CsvSource::parse_header() {
  if (!read_line()) throw Error(ErrorKind::InvalidInput, "data file '" + path_ + "' is empty");
  split(line_, options_.delimiter, fields_);
  n_fields_ = fields_.size();
  const bool with_response = options_.response.has_value();
  if (n_fields_ < (with_response ? 2u : 1u)) {
    throw Error(ErrorKind::Schema, "need at least one covariate and a response column");
  }

  std::vector<std::string> header;
  if (options_.has_header) {
    for (auto f : fields_) header.push_back(unquote(f));
  } else {
    for (std::size_t j = 0; j < n_fields_; ++j) header.push_back("V" + std::to_string(j + 1));
  }

  response_index_ = n_fields_;  // past the end: no response column
  if (with_response) {
    if (const auto* name = std::get_if<std::string>(&*options_.response)) {
      const auto it = std::find(header.begin(), header.end(), *name);
      if (it == header.end()) {
        throw Error(ErrorKind::Schema, "response column '" + *name + "' not found");
      }
      response_index_ = static_cast<std::size_t>(it - header.begin());
    } else {
      response_index_ = std::get<std::size_t>(*options_.response);
      if (response_index_ >= n_fields_) {
        throw Error(ErrorKind::Schema, "response column index out of range");
      }
    }
    response_name_ = header[response_index_];
  }
  names_.clear();
  for (std::size_t j = 0; j < n_fields_; ++j) {
    if (j != response_index_) names_.push_back(header[j]);
  }
  dim_ = static_cast<Index>(names_.size());
  if (!options_.has_header) {
    // The first line was data; start over so next_chunk sees it.
    rewind();
  }
}

void CsvSource::rewind() {
  in_.clear();
  in_.seekg(0);
  line_no_ = 0;
  if (options_.has_header) read_line();
}

bool CsvSource::next_chunk(Chunk<double>& chunk) {
  if (chunk.x.rows() != chunk_size_ || chunk.x.cols() != dim_) {
    chunk.x.resize(chunk_size_, dim_);
    chunk.y.resize(chunk_size_);
  }
  const std::size_t held =
      static_cast<std::size_t>(chunk.x.size() + chunk.y.size()) * sizeof(double);
  chunk_high_water_ = std::max(chunk_high_water_, held);
  Index rows = 0;
  while (rows < chunk_size_ && read_line()) {
    split(line_, options_.delimiter, fields_);
    if (fields_.size() != n_fields_) {
      throw Error(ErrorKind::Schema, "line " + std::to_string(line_no_) + ": expected " +
                                         std::to_string(n_fields_) + " fields, found " +
                                         std::to_string(fields_.size()));
    }
    Index col = 0;
    chunk.y(rows) = 0;
    for (std::size_t j = 0; j < n_fields_; ++j) {
      const double v = parse_double(fields_[j], line_no_);
      if (j == response_index_) {
        chunk.y(rows) = v;
      } else {
        chunk.x(rows, col++) = v;
      }
    }
    ++rows;
  }
  if (rows == 0) return false;
  if (rows < chunk_size_) {
    chunk.x.conservativeResize(rows, dim_);
    chunk.y.conservativeResize(rows);
  }
  return true;
}

MemorySource::MemorySource(const Dataset<double>& data, Index chunk_size)
    : data_(&data), chunk_size_(chunk_size) {
  if (chunk_size_ < 1) throw Error(ErrorKind::InvalidConfig, "chunk size must be >= 1");
}

bool MemorySource::next_chunk(Chunk<double>& chunk) {
  const Index remaining = data_->rows() - cursor_;
  if (remaining <= 0) return false;
  const Index rows = std::min(chunk_size_, remaining);
  chunk.x = data_->x.middleRows(cursor_, rows);
  chunk.y = data_->y.segment(cursor_, rows);
  cursor_ += rows;
  return true;
}

Dataset<double> read_csv(const std::string& path, const CsvOptions& options) {
  CsvSource src(path, 4096, options);
  std::vector<Chunk<double>> chunks;
  Index total = 0;
  Chunk<double> chunk;
  while (src.next_chunk(chunk)) {
    total += chunk.rows();
    chunks.push_back(chunk);
  }
  Dataset<double> data;
  data.x.resize(total, src.dimension());
  data.y.resize(total);
  data.covariate_names = src.covariate_names();
  Index at = 0;
  for (const auto& c : chunks) {
    data.x.middleRows(at, c.rows()) = c.x;
    data.y.segment(at, c.rows()) = c.y;
    at += c.rows();
  }
  return data;
}

void write_csv(const std::string& path, const Dataset<double>& data,
               const std::string& response_name, char delimiter) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::InvalidInput, "cannot write '" + path + "'");
  std::string line;
  for (Index j = 0; j < data.dimension(); ++j) {
    if (static_cast<std::size_t>(j) < data.covariate_names.size()) {
      line += data.covariate_names[j];
    } else {
      line += "x" + std::to_string(j + 1);
    }
    line += delimiter;
  }
  line += response_name;
  line += '\n';
  out << line;
  for (Index i = 0; i < data.rows(); ++i) {
    line.clear();
    for (Index j = 0; j < data.dimension(); ++j) {
      append_number(line, data.x(i, j));
      line += delimiter;
    }
    append_number(line, data.y(i));
    line += '\n';
    out << line;
  }
  if (!out) throw Error(ErrorKind::InvalidInput, "write failed for '" + path + "'");
}

namespace {
void check_sizes(Index n, Index p) {
  if (n < 1 || p < 1) throw Error(ErrorKind::InvalidInput, "simulation needs N >= 1 and p >= 1");
}

std::vector<std::string> default_names(Index p) {
  std::vector<std::string> names;
  for (Index j = 0; j < p; ++j) names.push_back("x" + std::to_string(j + 1));
  return names;
}
}  // namespace

SimulatedDataset simulate_lasso(Index n, Index p, double rho, double snr, std::uint64_t seed) {
  check_sizes(n, p);
  if (!(rho >= 0 && rho < 1)) throw Error(ErrorKind::InvalidInput, "rho must lie in [0, 1)");
  if (!(snr > 0)) throw Error(ErrorKind::InvalidInput, "snr must be positive");

  SimulatedDataset sim;
  sim.generator = "lasso";
  sim.seed = seed;
  sim.rho = rho;
  sim.snr = snr;
  sim.theta_star.resize(p);
  for (Index j = 1; j <= p; ++j) {
    const double sign = (j % 2 == 0) ? 1.0 : -1.0;
    sim.theta_star(j - 1) = sign * std::exp(-2.0 * double(j - 1) / 20.0);
  }
  // Var(x'theta*) under the equicorrelated covariance (1 - rho) I + rho 11'.
  const double sum = sim.theta_star.sum();
  const double signal_var = (1 - rho) * sim.theta_star.squaredNorm() + rho * sum * sum;
  sim.noise_scale = std::sqrt(signal_var / snr);

  Rng rng = make_rng(seed, RngStream::Simulate);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double shared = std::sqrt(rho);
  const double own = std::sqrt(1 - rho);
  auto& d = sim.data;
  d.x.resize(n, p);
  d.y.resize(n);
  d.covariate_names = default_names(p);
  for (Index i = 0; i < n; ++i) {
    const double z0 = normal(rng);
    for (Index j = 0; j < p; ++j) d.x(i, j) = shared * z0 + own * normal(rng);
    d.y(i) = d.x.row(i).dot(sim.theta_star) + sim.noise_scale * normal(rng);
  }
  return sim;
}

SimulatedDataset simulate_huber(Index n, Index p, std::uint64_t seed) {
  check_sizes(n, p);
  SimulatedDataset sim;
  sim.generator = "huber";
  sim.seed = seed;

  Rng rng = make_rng(seed, RngStream::Simulate);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution contaminated(0.05);

  sim.theta_star.resize(p);
  for (Index j = 0; j < p; ++j) sim.theta_star(j) = normal(rng);
  sim.theta_star *= 6.0 * std::sqrt(double(p)) / sim.theta_star.norm();

  const double sd = 1.0 / std::sqrt(double(n));
  auto& d = sim.data;
  d.x.resize(n, p);
  d.y.resize(n);
  d.covariate_names = default_names(p);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) d.x(i, j) = sd * normal(rng);
    const double eps = contaminated(rng) ? 10.0 : normal(rng);
    d.y(i) = d.x.row(i).dot(sim.theta_star) + eps;
  }
  return sim;
}

void standardize_columns(Dataset<double>& data) {
  const Index n = data.rows();
  if (n < 2) return;
  for (Index j = 0; j < data.dimension(); ++j) {
    auto col = data.x.col(j);
    const double mean = col.mean();
    col.array() -= mean;
    const double sd = std::sqrt(col.squaredNorm() / double(n - 1));
    if (sd > 0) col /= sd;
  }
}

void write_sidecar(const std::string& path, const SimulatedDataset& sim) {
  nlohmann::json j;
  j["generator"] = sim.generator;
  j["seed"] = sim.seed;
  j["n"] = sim.data.rows();
  j["p"] = sim.data.dimension();
  j["theta_star"] = std::vector<double>(sim.theta_star.data(),
                                        sim.theta_star.data() + sim.theta_star.size());
  if (sim.generator == "lasso") {
    j["rho"] = sim.rho;
    j["snr"] = sim.snr;
    j["noise_scale"] = sim.noise_scale;
  } else {
    j["contamination"] = {{"probability", 0.05}, {"point_mass", 10.0}};
    j["design_sd"] = 1.0 / std::sqrt(double(sim.data.rows()));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::InvalidInput, "cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

}  // namespace isgd
