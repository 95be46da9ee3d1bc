#include "isgd/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "isgd/data_io.hpp"
#include "isgd/diagnostics.hpp"
#include "isgd/model.hpp"
#include "isgd/optimizers.hpp"
#include "isgd/path.hpp"
#include "isgd/schedules.hpp"

namespace isgd::cli {
namespace {

using json = nlohmann::json;

struct DataFlags {
  std::string data;
  std::string response = "y";
  bool no_header = false;
  std::string delimiter = ",";
  Index chunk_size = 10000;
};

struct FitFlags {
  DataFlags data;
  std::string model = "gaussian";
  double huber_delta = 3.0;
  std::string method = "ai-sgd";
  std::string lr = "onedim";
  double gamma0 = 1;
  double lr_a = 1;
  std::optional<double> lr_c;
  double lr_eta = 1;
  double lr_eps = 1e-6;
  double lr_beta = 0.9;
  int passes = 1;
  double alpha = 0;
  double lambda = 0;
  double momentum = 0.9;
  std::uint64_t seed = 0;
  bool shuffle = false;
  double tol = 1e-5;
  int window = 10;
  bool stop_on_convergence = false;
  double root_tol = 1e-10;
  std::string out;
  std::string trace;
  std::int64_t trace_every = 100;
  std::string truth;
};

void add_data_flags(CLI::App* cmd, DataFlags& f) {
  cmd->add_option("--data", f.data, "Delimited input file")->required();
  cmd->add_option("--response", f.response, "Response column name (or 0-based index)");
  cmd->add_flag("--no-header", f.no_header, "Input has no header row");
  cmd->add_option("--delimiter", f.delimiter, "Field delimiter: ',' or 'tab'");
  cmd->add_option("--chunk-size", f.chunk_size, "Rows held in memory at once")
      ->check(CLI::PositiveNumber);
}

void add_fit_flags(CLI::App* cmd, FitFlags& f) {
  add_data_flags(cmd, f.data);
  cmd->add_option("--model", f.model, "gaussian|binomial|poisson|huber");
  cmd->add_option("--huber-delta", f.huber_delta, "Huber threshold");
  cmd->add_option("--method", f.method, "esgd|isgd|asgd|ai-sgd|momentum|nag");
  cmd->add_option("--lr", f.lr, "onedim|adagrad|rmsprop|fisher");
  cmd->add_option("--gamma0", f.gamma0, "One-dimensional rate: gamma0");
  cmd->add_option("--lr-a", f.lr_a, "One-dimensional rate: a");
  cmd->add_option("--lr-c", f.lr_c, "One-dimensional rate: c (default 1, or 2/3 when averaging)");
  cmd->add_option("--lr-eta", f.lr_eta, "Adaptive rate: eta");
  cmd->add_option("--lr-eps", f.lr_eps, "Adaptive rate: epsilon");
  cmd->add_option("--lr-beta", f.lr_beta, "RMSProp discount");
  cmd->add_option("--passes", f.passes, "Passes over the data");
  cmd->add_option("--alpha", f.alpha, "Elastic-net mixing in [0, 1]");
  cmd->add_option("--lambda", f.lambda, "Penalty strength");
  cmd->add_option("--momentum", f.momentum, "Momentum coefficient for momentum/nag");
  cmd->add_option("--seed", f.seed, "Seed for shuffling");
  cmd->add_flag("--shuffle", f.shuffle, "Visit rows of each chunk in random order");
  cmd->add_option("--tol", f.tol, "Relative-change tolerance for the convergence report");
  cmd->add_option("--window", f.window, "Updates that must all be below --tol");
  cmd->add_flag("--stop-on-convergence", f.stop_on_convergence, "Stop once converged");
  cmd->add_option("--root-tol", f.root_tol, "Tolerance of the implicit root solve");
  cmd->add_option("--out", f.out, "Write JSON results here");
  cmd->add_option("--trace", f.trace, "Write per-update trace CSV here");
  cmd->add_option("--trace-every", f.trace_every, "Trace thinning interval")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--truth", f.truth, "Simulation sidecar JSON; traces mse to theta*");
}

char parse_delimiter(const std::string& d) {
  if (d == "tab" || d == "\\t" || d == "\t") return '\t';
  if (d.size() != 1) throw Error(ErrorKind::InvalidConfig, "delimiter must be one character");
  return d[0];
}

CsvOptions csv_options(const DataFlags& f, bool response_required = true) {
  CsvOptions o;
  o.delimiter = parse_delimiter(f.delimiter);
  o.has_header = !f.no_header;
  const bool numeric = !f.response.empty() &&
                       std::all_of(f.response.begin(), f.response.end(),
                                   [](char c) { return c >= '0' && c <= '9'; });
  if (numeric && f.no_header) {
    o.response = ResponseColumn(static_cast<std::size_t>(std::stoul(f.response)));
  } else if (f.no_header && f.response == "y") {
    o.response.reset();  // resolved to the last column below
  } else {
    o.response = ResponseColumn(f.response);
  }
  if (!o.response && response_required) {
    // Headerless files default to the last column as response.
    CsvOptions probe = o;
    CsvSource s(f.data, 1, probe);
    o.response = ResponseColumn(static_cast<std::size_t>(s.dimension() - 1));
  }
  return o;
}

ScheduleConfig<double> schedule_config(const FitFlags& f) {
  ScheduleConfig<double> s;
  s.kind = ScheduleConfig<double>::parse_kind(f.lr);
  s.gamma0 = f.gamma0;
  s.a = f.lr_a;
  s.c = f.lr_c;
  s.eta = f.lr_eta;
  s.epsilon = f.lr_eps;
  s.beta = f.lr_beta;
  return s;
}

FitConfig<double> fit_config(const FitFlags& f) {
  FitConfig<double> c;
  c.method = parse_method(f.method);
  c.passes = f.passes;
  c.momentum_mu = f.momentum;
  c.shuffle = f.shuffle;
  c.seed = f.seed;
  c.tol = f.tol;
  c.window = f.window;
  c.stop_on_convergence = f.stop_on_convergence;
  c.trace_every = f.trace.empty() ? 0 : f.trace_every;
  return c;
}

ImplicitConfig<double> solver_config(const FitFlags& f) {
  ImplicitConfig<double> s;
  s.root_tolerance = f.root_tol;
  s.validate();
  return s;
}

json to_json(const Vector<double>& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Vector<double> vector_from_json(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector<double>>(values.data(), static_cast<Index>(values.size()));
}

json settings_json(const FitFlags& f, const FitConfig<double>& fc,
                   const ScheduleConfig<double>& sc) {
  json j;
  j["model"] = f.model;
  if (f.model == "huber") j["huber_delta"] = f.huber_delta;
  j["method"] = to_string(fc.method);
  j["passes"] = fc.passes;
  j["seed"] = fc.seed;
  j["shuffle"] = fc.shuffle;
  j["alpha"] = f.alpha;
  json lr;
  lr["kind"] = to_string(sc.kind);
  if (sc.kind == ScheduleConfig<double>::Kind::OneDim) {
    lr["gamma0"] = sc.gamma0;
    lr["a"] = sc.a;
    lr["c"] = sc.c.value_or(is_averaged(fc.method) ? 2.0 / 3.0 : 1.0);
  } else {
    lr["eta"] = sc.eta;
    lr["epsilon"] = sc.epsilon;
    if (sc.kind == ScheduleConfig<double>::Kind::RMSProp) lr["beta"] = sc.beta;
  }
  j["learning_rate"] = lr;
  return j;
}

void write_text_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::InvalidInput, "cannot write '" + path + "'");
  out << contents;
}

FitHooks<double> make_hooks(const FitFlags& f) {
  FitHooks<double> hooks;
  if (!f.truth.empty()) {
    std::ifstream in(f.truth);
    if (!in) throw Error(ErrorKind::InvalidInput, "cannot open truth file '" + f.truth + "'");
    const json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.contains("theta_star")) {
      throw Error(ErrorKind::Parse, "truth file lacks theta_star");
    }
    Vector<double> truth = vector_from_json(j["theta_star"]);
    hooks.metric_name = "mse";
    hooks.metric = [truth](const Vector<double>& est) {
      if (est.size() != truth.size()) {
        throw Error(ErrorKind::Schema, "truth dimension differs from the data");
      }
      return mse_to_truth(est, truth);
    };
  }
  return hooks;
}

std::string format_estimate_table(const std::vector<std::string>& names, const Vector<double>& est) {
  std::size_t width = 8;
  for (const auto& n : names) width = std::max(width, n.size());
  std::ostringstream os;
  char buf[64];
  os << std::string(width - 8, ' ') << "variable" << "  " << "    estimate\n";
  for (Index j = 0; j < est.size(); ++j) {
    const std::string& name = names[static_cast<std::size_t>(j)];
    std::snprintf(buf, sizeof buf, "%12.6g", est(j));
    os << std::string(width - name.size(), ' ') << name << "  " << buf << '\n';
  }
  return os.str();
}

int cmd_fit(const FitFlags& f, std::ostream& out) {
  const auto spec = objective_from_name(f.model, f.huber_delta);
  const auto sc = schedule_config(f);
  const auto fc = fit_config(f);
  const auto solver = solver_config(f);
  const Penalty<double> pen(f.alpha, f.lambda);
  const auto hooks = make_hooks(f);

  CsvSource source(f.data.data, f.data.chunk_size, csv_options(f.data));
  const auto result = fit(source, spec, sc, pen, fc, solver, hooks);

  if (!f.out.empty()) {
    json j = settings_json(f, fc, sc);
    j["lambda"] = f.lambda;
    j["response"] = source.response_name();
    j["covariates"] = source.covariate_names();
    j["estimate"] = to_json(result.estimate);
    j["last_iterate"] = to_json(result.last_iterate);
    j["updates"] = result.updates;
    j["converged"] = result.converged;
    write_text_file(f.out, j.dump(2) + "\n");
  }
  if (!f.trace.empty()) write_trace_csv(f.trace, result.trace);

  out << "method " << to_string(fc.method) << ", model " << f.model << ", " << result.updates
      << " updates, converged: " << (result.converged ? "yes" : "no") << "\n";
  out << format_estimate_table(source.covariate_names(), result.estimate);
  return kOk;
}

struct PathFlags {
  FitFlags fit;
  int n_lambda = 100;
  double lambda_min_ratio = 1e-3;
  bool no_warm_start = false;
  int parallel = 1;
  std::optional<double> lambda_max;
};

int cmd_path(const PathFlags& f, std::ostream& out) {
  const auto spec = objective_from_name(f.fit.model, f.fit.huber_delta);
  const auto sc = schedule_config(f.fit);
  const auto fc = fit_config(f.fit);
  const auto solver = solver_config(f.fit);
  PathConfig pc;
  pc.n_lambda = f.n_lambda;
  pc.lambda_min_ratio = f.lambda_min_ratio;
  pc.alpha = f.fit.alpha;
  pc.warm_start = !f.no_warm_start;
  pc.parallel = f.parallel;
  pc.lambda_max = f.lambda_max;

  const CsvOptions opts = csv_options(f.fit.data);
  std::vector<std::string> names;
  std::string response;
  {
    CsvSource probe(f.fit.data.data, 1, opts);
    names = probe.covariate_names();
    response = probe.response_name();
  }
  auto make_source = [&] { return CsvSource(f.fit.data.data, f.fit.data.chunk_size, opts); };
  const PathResult path = run_path(make_source, spec, sc, pc, fc, solver);

  if (!f.fit.out.empty()) {
    json j = settings_json(f.fit, fc, sc);
    j["response"] = response;
    j["covariates"] = names;
    j["warm_start"] = pc.warm_start;
    j["lambda_grid"] = path.grid;
    json entries = json::array();
    for (const auto& e : path.entries) {
      json je;
      je["lambda"] = e.lambda;
      je["status"] = e.status;
      if (!e.message.empty()) je["message"] = e.message;
      if (e.result) {
        je["estimate"] = to_json(e.result->estimate);
        je["updates"] = e.result->updates;
        je["converged"] = e.result->converged;
      }
      entries.push_back(je);
    }
    j["entries"] = entries;
    write_text_file(f.fit.out, j.dump(2) + "\n");
  }
  out << format_path_table(path);
  return kOk;
}

struct SimulateFlags {
  std::string generator = "lasso";
  Index n = 1000;
  Index p = 100;
  double rho = 0;
  double snr = 3.0;
  std::uint64_t seed = 0;
  std::string out;
  bool standardize = false;
};

int cmd_simulate(const SimulateFlags& f, std::ostream& out) {
  SimulatedDataset sim;
  if (f.generator == "lasso") {
    sim = simulate_lasso(f.n, f.p, f.rho, f.snr, f.seed);
  } else if (f.generator == "huber") {
    sim = simulate_huber(f.n, f.p, f.seed);
  } else {
    throw Error(ErrorKind::InvalidConfig, "unknown generator '" + f.generator + "'");
  }
  if (f.standardize) standardize_columns(sim.data);
  write_csv(f.out, sim.data);
  write_sidecar(f.out + ".json", sim);
  out << "wrote " << sim.data.rows() << " rows x " << sim.data.dimension() << " covariates to "
      << f.out << " (sidecar " << f.out << ".json)\n";
  return kOk;
}

struct PredictFlags {
  DataFlags data;
  std::string model_file;
  std::string out;
};

int cmd_predict(const PredictFlags& f, std::ostream& out) {
  std::ifstream in(f.model_file);
  if (!in) throw Error(ErrorKind::InvalidInput, "cannot open model file '" + f.model_file + "'");
  const json model = json::parse(in, nullptr, false);
  if (model.is_discarded() || !model.contains("estimate") || !model.contains("model")) {
    throw Error(ErrorKind::Parse, "model file is not a fit result");
  }
  const auto spec = objective_from_name(model["model"].get<std::string>(),
                                        model.value("huber_delta", 3.0));
  const Vector<double> theta = vector_from_json(model["estimate"]);

  // Use the response column when the file has one; otherwise all columns are covariates.
  CsvOptions opts = csv_options(f.data, false);
  bool has_response = opts.response.has_value();
  if (has_response && !f.data.no_header) {
    CsvOptions probe = opts;
    probe.response.reset();
    CsvSource s(f.data.data, 1, probe);
    const auto& cols = s.covariate_names();
    has_response = std::find(cols.begin(), cols.end(), f.data.response) != cols.end();
    if (!has_response) opts.response.reset();
  }
  const Dataset<double> data = read_csv(f.data.data, opts);
  if (data.dimension() != theta.size()) {
    throw Error(ErrorKind::Schema, "data has " + std::to_string(data.dimension()) +
                                       " covariates, model has " + std::to_string(theta.size()));
  }

  std::string csv = "prediction\n";
  Vector<double> pred(data.rows());
  char buf[32];
  for (Index i = 0; i < data.rows(); ++i) {
    pred(i) = predict(spec, theta, data.x.row(i).transpose());
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, pred(i));
    csv.append(buf, ptr);
    csv += '\n';
  }
  if (f.out.empty()) {
    out << csv;
  } else {
    write_text_file(f.out, csv);
    out << "wrote " << data.rows() << " predictions to " << f.out << "\n";
  }
  if (has_response && data.rows() > 0) {
    if (spec.kind() == ObjectiveKind::GlmBinomial) {
      out << "classification error: " << classification_error(spec, theta, data) << "\n";
    } else {
      out << "mean squared prediction error: " << (pred - data.y).squaredNorm() / double(data.rows())
          << "\n";
    }
  }
  return kOk;
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidConfig:
    case ErrorKind::UnsupportedOperation:
      return kConfigError;
    case ErrorKind::InvalidInput:
    case ErrorKind::Parse:
    case ErrorKind::Schema:
      return kDataError;
    case ErrorKind::Divergence:
    case ErrorKind::NumericOverflow:
    case ErrorKind::SolverFailure:
    case ErrorKind::ConvergenceFailure:
      return kDivergence;
  }
  return kConfigError;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Implicit and averaged stochastic gradient estimation for GLMs and M-estimators",
               "isgd"};
  app.require_subcommand(1);

  FitFlags fit_flags;
  auto* fit_cmd = app.add_subcommand("fit", "Fit one model");
  add_fit_flags(fit_cmd, fit_flags);

  PathFlags path_flags;
  path_flags.fit.alpha = 1;  // lasso path unless told otherwise
  auto* path_cmd = app.add_subcommand("path", "Fit a regularization path over a lambda grid");
  add_fit_flags(path_cmd, path_flags.fit);
  path_cmd->add_option("--n-lambda", path_flags.n_lambda, "Grid size");
  path_cmd->add_option("--lambda-min-ratio", path_flags.lambda_min_ratio,
                       "Smallest lambda as a fraction of lambda-max");
  path_cmd->add_option("--lambda-max", path_flags.lambda_max,
                       "Largest lambda (required when alpha = 0)");
  path_cmd->add_flag("--no-warm-start", path_flags.no_warm_start,
                     "Start every lambda from the initial value");
  path_cmd->add_option("--parallel", path_flags.parallel, "Workers for cold-start paths");

  SimulateFlags sim_flags;
  auto* sim_cmd = app.add_subcommand("simulate", "Write a simulated dataset and sidecar JSON");
  sim_cmd->add_option("--generator", sim_flags.generator, "lasso|huber");
  sim_cmd->add_option("--n", sim_flags.n, "Rows")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--p", sim_flags.p, "Covariates")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--rho", sim_flags.rho, "Pairwise covariate correlation (lasso)");
  sim_cmd->add_option("--snr", sim_flags.snr, "Signal-to-noise variance ratio (lasso)");
  sim_cmd->add_option("--seed", sim_flags.seed, "Generator seed");
  sim_cmd->add_option("--out", sim_flags.out, "Output data file")->required();
  sim_cmd->add_flag("--standardize", sim_flags.standardize, "Standardize covariate columns");

  PredictFlags pred_flags;
  auto* pred_cmd = app.add_subcommand("predict", "Predict from a fitted model");
  add_data_flags(pred_cmd, pred_flags.data);
  pred_cmd->add_option("--model-file", pred_flags.model_file, "JSON written by fit --out")
      ->required();
  pred_cmd->add_option("--out", pred_flags.out, "Prediction CSV (default: stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*fit_cmd) return cmd_fit(fit_flags, out);
    if (*path_cmd) return cmd_path(path_flags, out);
    if (*sim_cmd) return cmd_simulate(sim_flags, out);
    if (*pred_cmd) return cmd_predict(pred_flags, out);
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << "\n";
    return kDivergence;
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  }
  return kConfigError;
}

}  // namespace isgd::cli
