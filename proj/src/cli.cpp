#include "repsim/cli.hpp"

#include "repsim/analysis.hpp"
#include "repsim/error.hpp"
#include "repsim/json_out.hpp"
#include "repsim/parallel.hpp"
#include "repsim/probes.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace repsim::cli {

namespace {

using Json = nlohmann::ordered_json;

std::vector<std::vector<std::string>> parse_classes(const std::string& spec) {
  std::vector<std::vector<std::string>> classes;
  std::stringstream groups(spec);
  std::string group;
  while (std::getline(groups, group, ';')) {
    std::vector<std::string> members;
    std::stringstream names(group);
    std::string name;
    while (std::getline(names, name, ','))
      if (!name.empty()) members.push_back(name);
    if (!members.empty()) classes.push_back(std::move(members));
  }
  if (classes.empty()) throw InputError("--classes: no classes given");
  return classes;
}

unsigned thread_override(unsigned fallback) {
  const char* env = std::getenv("REPSIM_THREADS");
  if (env == nullptr || *env == '\0') return fallback;
  unsigned value = 0;
  const char* end = env + std::char_traits<char>::length(env);
  auto [ptr, ec] = std::from_chars(env, end, value);
  if (ec != std::errc{} || ptr != end || value == 0)
    throw InputError("REPSIM_THREADS must be a positive integer");
  return value;
}

Json metric_json(const MetricId& metric) {
  Json j;
  j["kind"] = std::string(to_string(metric.kind));
  j["lambda"] = metric.lambda;
  if (metric.kind == MetricKind::gulp_kernel) {
    j["kernel"] = metric.kernel.type == Kernel::Type::linear ? "linear" : "rbf";
    if (metric.kernel.type == Kernel::Type::rbf) j["bandwidth"] = metric.kernel.bandwidth;
  }
  return j;
}

Json matrix_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string number(double v) { return format_double(v); }

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

class Runner {
 public:
  Runner(const RunConfig& config, std::ostream& out) : config_(config), out_(out) {}

  void execute() {
    switch (config_.command) {
      case Command::validate: return validate();
      case Command::dist: return dist();
      case Command::distmat: return distmat();
      case Command::embed: return embed();
      case Command::cluster: return cluster();
      case Command::probe: return probe();
      case Command::converge: return converge();
      case Command::synth: return synth();
    }
  }

 private:
  bool csv() const { return config_.format == OutputFormat::csv; }

  void emit(const std::string& text) {
    if (config_.output)
      write_file_atomic(*config_.output, text);
    else
      out_ << text;
  }

  void emit(const Json& j) { emit(dump_json(j) + "\n"); }

  void require_inputs(std::size_t at_least) const {
    if (config_.inputs.size() < at_least)
      throw InputError("expected at least " + std::to_string(at_least) + " input file(s)");
  }

  void json_only(const char* command) const {
    if (csv()) throw InputError(std::string("--format csv is not supported by ") + command);
  }

  std::vector<Representation> load_inputs() const {
    std::vector<Representation> reps;
    for (const auto& path : config_.inputs)
      reps.push_back(normalize(load_representation(path, config_.has_header)));
    return reps;
  }

  double single_lambda() const {
    if (!config_.lambda_given) return 1e-2;
    if (config_.lambdas.size() != 1)
      throw InputError("this command takes a single --lambda value");
    return config_.lambdas.front();
  }

  MetricId single_metric() const {
    MetricId metric = config_.metric;
    metric.lambda = uses_lambda(metric.kind) ? single_lambda() : 0.0;
    return metric;
  }

  DistanceMatrix matrix_from_inputs() const {
    if (config_.inputs.size() == 1 && config_.inputs.front().extension() == ".json")
      return read_distance_matrix(config_.inputs.front());
    require_inputs(2);
    const auto reps = load_inputs();
    return distance_matrix(reps, single_metric(), config_.threads);
  }

  static DistanceMatrix read_distance_matrix(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path.string() + "'");
    Json j;
    try {
      j = Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw InputError("invalid JSON in '" + path.string() + "': " + e.what());
    }
    DistanceMatrix dm;
    try {
      dm.names = j.at("names").get<std::vector<std::string>>();
      const auto rows = j.at("matrix").get<std::vector<std::vector<double>>>();
      const auto m = static_cast<Eigen::Index>(rows.size());
      dm.values.resize(m, m);
      for (Eigen::Index i = 0; i < m; ++i) {
        if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != m)
          throw InputError("distance matrix in '" + path.string() + "' is not square");
        for (Eigen::Index jj = 0; jj < m; ++jj)
          dm.values(i, jj) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(jj)];
      }
      if (j.contains("metric")) {
        dm.metric.kind = parse_metric_kind(j["metric"].at("kind").get<std::string>());
        dm.metric.lambda = j["metric"].value("lambda", 0.0);
      }
    } catch (const nlohmann::json::exception& e) {
      throw InputError("malformed distance matrix in '" + path.string() + "': " + e.what());
    }
    dm.validate();
    return dm;
  }

  // -------------------------------------------------------------------------

  void validate() {
    json_only("validate");
    require_inputs(1);
    Json items = Json::array();
    for (const auto& path : config_.inputs) {
      const Representation rep = load_representation(path, config_.has_header);
      const Representation normalized = normalize(rep);
      Json item;
      item["path"] = path.string();
      item["name"] = rep.name();
      item["n"] = rep.samples();
      item["k"] = rep.features();
      item["normalizable"] = normalized.is_normalized();
      items.push_back(std::move(item));
    }
    Json j;
    j["inputs"] = std::move(items);
    emit(j);
  }

  void dist() {
    if (config_.inputs.size() != 2) throw InputError("dist takes exactly two inputs");
    const auto reps = load_inputs();
    const auto& a = reps[0];
    const auto& b = reps[1];

    std::vector<double> lambdas{0.0};
    if (uses_lambda(config_.metric.kind)) lambdas = config_.lambdas;

    Json records = Json::array();
    std::string table = "a,b,kind,lambda,value,squared_value\n";
    for (const double lambda : lambdas) {
      MetricId metric = config_.metric;
      metric.lambda = lambda;
      Json rec;
      rec["a"] = a.name();
      rec["b"] = b.name();
      rec["metric"] = metric_json(metric);
      double value = 0.0, squared = 0.0;
      Json flags = Json::array();
      try {
        if (metric.kind == MetricKind::ridge_cca_inner) {
          value = ridge_cca_inner(compute_moments(a, b), lambda);
          squared = value * value;
          flags.push_back("similarity");
        } else {
          const DistanceRecord r = compute_distance(a, b, metric);
          value = r.value;
          squared = r.squared_value;
          for (const auto& f : r.flags) flags.push_back(f);
        }
      } catch (const NumericalError& e) {
        throw NumericalError("pair ('" + a.name() + "', '" + b.name() + "') metric " +
                             std::string(to_string(metric.kind)) + ": " + e.what());
      }
      rec["value"] = value;
      rec["squared_value"] = squared;
      rec["flags"] = std::move(flags);
      records.push_back(std::move(rec));
      table += csv_escape(a.name()) + "," + csv_escape(b.name()) + "," +
               std::string(to_string(metric.kind)) + "," + number(lambda) + "," +
               number(value) + "," + number(squared) + "\n";
    }
    if (csv()) return emit(table);
    Json j;
    j["records"] = std::move(records);
    emit(j);
  }

  void distmat() {
    const DistanceMatrix dm = matrix_from_inputs();
    if (csv()) {
      std::string text = "name";
      for (const auto& name : dm.names) text += "," + csv_escape(name);
      text += "\n";
      for (Eigen::Index i = 0; i < dm.size(); ++i) {
        text += csv_escape(dm.names[static_cast<std::size_t>(i)]);
        for (Eigen::Index j = 0; j < dm.size(); ++j) text += "," + number(dm.values(i, j));
        text += "\n";
      }
      return emit(text);
    }
    Json j;
    j["names"] = dm.names;
    j["metric"] = metric_json(dm.metric);
    j["matrix"] = matrix_json(dm.values);
    if (dm.symmetrized) j["symmetrized"] = true;
    emit(j);
  }

  void embed() {
    const Embedding e = classical_mds(matrix_from_inputs(), config_.dims);
    if (csv()) {
      std::string text = "name";
      for (Eigen::Index d = 0; d < e.coords.cols(); ++d) text += ",x" + std::to_string(d + 1);
      text += "\n";
      for (Eigen::Index i = 0; i < e.coords.rows(); ++i) {
        text += csv_escape(e.names[static_cast<std::size_t>(i)]);
        for (Eigen::Index d = 0; d < e.coords.cols(); ++d) text += "," + number(e.coords(i, d));
        text += "\n";
      }
      return emit(text);
    }
    Json j;
    j["names"] = e.names;
    j["coords"] = matrix_json(e.coords);
    j["eigenvalues"] = std::vector<double>(e.eigenvalues.begin(), e.eigenvalues.end());
    emit(j);
  }

  void cluster() {
    const DistanceMatrix dm = matrix_from_inputs();
    const Dendrogram tree = cluster_average_linkage(dm);
    if (csv()) {
      std::string text = "left,right,height,size\n";
      for (const auto& m : tree.merges)
        text += std::to_string(m.left) + "," + std::to_string(m.right) + "," +
                number(m.height) + "," + std::to_string(m.size) + "\n";
      return emit(text);
    }
    Json merges = Json::array();
    for (const auto& m : tree.merges) {
      Json item;
      item["left"] = m.left;
      item["right"] = m.right;
      item["height"] = m.height;
      item["size"] = m.size;
      merges.push_back(std::move(item));
    }
    Json j;
    j["merges"] = std::move(merges);
    if (!config_.classes.empty()) {
      Json ratios = Json::array();
      const auto values = std_ratio(dm, config_.classes);
      for (std::size_t c = 0; c < values.size(); ++c) {
        Json item;
        item["members"] = config_.classes[c];
        item["ratio"] = values[c].unbounded ? Json(nullptr) : Json(values[c].ratio);
        item["unbounded"] = values[c].unbounded;
        ratios.push_back(std::move(item));
      }
      j["std_ratio"] = std::move(ratios);
    }
    emit(j);
  }

  void probe() {
    json_only("probe");
    const auto reps = load_inputs();
    Json j;
    if (config_.probe_mode == ProbeMode::bound) {
      if (reps.size() != 2) throw InputError("probe --mode bound takes exactly two inputs");
      const double lambda = single_lambda();
      const auto report = uniform_bound_check(reps[0], reps[1], lambda, config_.tasks,
                                              config_.seed);
      j["mode"] = "bound";
      j["lambda"] = lambda;
      j["tasks"] = report.tasks;
      j["max_gap"] = report.max_gap;
      j["gulp_sq"] = report.gulp_sq;
      j["violations"] = report.violations;
    } else {
      GeneralizationConfig gc;
      gc.task_lambda = single_lambda();
      gc.n_tasks = config_.tasks;
      gc.seed = config_.seed;
      gc.threads = config_.threads;
      const auto rows = generalization_experiment(reps, gc);
      Json results = Json::array();
      for (const auto& row : rows) {
        Json item;
        item["metric"] = metric_json(row.metric);
        item["mean_rho"] = row.mean_rho ? Json(*row.mean_rho) : Json(nullptr);
        item["defined_tasks"] = row.defined_tasks;
        results.push_back(std::move(item));
      }
      j["mode"] = "generalization";
      j["task_lambda"] = gc.task_lambda;
      j["tasks"] = gc.n_tasks;
      j["results"] = std::move(results);
    }
    emit(j);
  }

  void converge() {
    if (config_.inputs.size() != 2) throw InputError("converge takes exactly two inputs");
    const auto reps = load_inputs();
    std::vector<std::size_t> sizes = config_.sizes;
    if (sizes.empty()) sizes = {100, 200, 500, 1000, 2000};
    const auto curve = convergence_curve(reps[0], reps[1], single_lambda(), sizes,
                                         config_.seed, config_.threads);
    if (csv()) {
      std::string text = "size,rel_error\n";
      for (std::size_t i = 0; i < curve.sizes.size(); ++i)
        text += std::to_string(curve.sizes[i]) + "," + number(curve.rel_errors[i]) + "\n";
      return emit(text);
    }
    Json j;
    j["sizes"] = curve.sizes;
    j["rel_errors"] = curve.rel_errors;
    j["slope"] = curve.slope;
    j["reference"] = curve.reference;
    emit(j);
  }

  void synth() {
    if (!config_.output) throw InputError("synth requires --output");
    SynthSpec spec = config_.synth;
    spec.seed = config_.seed;
    const auto reps = synthesize(spec);

    const std::filesystem::path& base = *config_.output;
    const std::string ext = csv() ? ".csv" : ".repm";
    std::filesystem::path stem = base;
    if (stem.extension() == ".repm" || stem.extension() == ".csv") stem.replace_extension();
    Json written = Json::array();
    for (std::size_t i = 0; i < reps.size(); ++i) {
      std::filesystem::path path = stem;
      if (reps.size() > 1) path += (i == 0 ? "_a" : "_b");
      path += ext;
      if (csv())
        save_csv(reps[i], path);
      else
        save_repm(reps[i], path);
      written.push_back(path.string());
    }
    Json j;
    j["family"] = std::string(to_string(spec.family));
    j["outputs"] = std::move(written);
    out_ << dump_json(j) << "\n";
  }

  const RunConfig& config_;
  std::ostream& out_;
};

}  // namespace

// ---------------------------------------------------------------------------

std::optional<RunConfig> parse_args(int argc, const char* const* argv, std::ostream& out) {
  CLI::App app{"Representation similarity: GULP distances and baselines"};
  app.require_subcommand(1);

  RunConfig config;
  config.threads = default_thread_count();
  std::string metric = "gulp";
  std::string kernel = "linear";
  double bandwidth = 1.0;
  std::string format = "json";
  std::string output;
  std::string classes;
  std::string mode = "bound";
  std::string family = "gaussian";
  std::vector<std::string> inputs;
  std::vector<double> lambdas;

  auto common = [&](CLI::App* sub, bool takes_inputs, bool takes_metric) {
    if (takes_inputs) sub->add_option("inputs", inputs, "Input representations (.csv or .repm)");
    if (takes_metric) {
      sub->add_option("--metric", metric,
                      "gulp, gulp_pairwise, gulp_kernel, cca, ridge_cca_inner, cka, pwcca, "
                      "procrustes");
      sub->add_option("--kernel", kernel, "gulp_kernel: linear or rbf");
      sub->add_option("--bandwidth", bandwidth, "gulp_kernel rbf bandwidth");
    }
    sub->add_option("--lambda", lambdas, "Regularization value(s)")
        ->delimiter(',')
        ->allow_extra_args(false);
    sub->add_option("--seed", config.seed, "Random seed");
    sub->add_option("--threads", config.threads, "Worker threads (REPSIM_THREADS overrides)");
    sub->add_option("-o,--output", output, "Output path (default: standard output)");
    sub->add_option("--format", format, "json or csv");
    sub->add_flag("--header", config.has_header, "CSV inputs have a header row");
  };

  auto* validate = app.add_subcommand("validate", "Check input files");
  common(validate, true, false);
  auto* dist = app.add_subcommand("dist", "Distance between two representations");
  common(dist, true, true);
  auto* distmat = app.add_subcommand("distmat", "Pairwise distance matrix");
  common(distmat, true, true);
  auto* embed = app.add_subcommand("embed", "Classical MDS embedding");
  common(embed, true, true);
  embed->add_option("--dims", config.dims, "Embedding dimension");
  auto* cluster = app.add_subcommand("cluster", "Average-linkage dendrogram");
  common(cluster, true, true);
  cluster->add_option("--classes", classes, "Classes for std ratios, e.g. 'a,b;c,d'");
  auto* probe = app.add_subcommand("probe", "Ridge-probe checks");
  common(probe, true, false);
  probe->add_option("--mode", mode, "bound or generalization");
  probe->add_option("--tasks", config.tasks, "Number of random tasks");
  auto* converge = app.add_subcommand("converge", "Plug-in convergence curve");
  common(converge, true, false);
  converge->add_option("--sizes", config.sizes, "Sample sizes")
      ->delimiter(',')
      ->allow_extra_args(false);
  auto* synth = app.add_subcommand("synth", "Generate synthetic representations");
  common(synth, false, false);
  synth->add_option("--family", family,
                    "gaussian, rotated_copy, linear_map, noisy_copy, lowrank");
  synth->add_option("--n", config.synth.n, "Samples")->required();
  synth->add_option("--k", config.synth.k, "Features")->required();
  synth->add_option("--sigma", config.synth.sigma, "noisy_copy noise level");
  synth->add_option("--rank", config.synth.rank, "lowrank rank");
  synth->add_option("--rho", config.synth.rho, "gaussian pair correlation");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return std::nullopt;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return std::nullopt;
  } catch (const CLI::ParseError& e) {
    throw InputError(e.what());
  }

  const std::pair<CLI::App*, Command> commands[] = {
      {validate, Command::validate}, {dist, Command::dist},       {distmat, Command::distmat},
      {embed, Command::embed},       {cluster, Command::cluster}, {probe, Command::probe},
      {converge, Command::converge}, {synth, Command::synth}};
  for (const auto& [sub, command] : commands)
    if (sub->parsed()) config.command = command;

  for (const auto& in : inputs) config.inputs.emplace_back(in);
  if (config.inputs.empty() && config.command != Command::synth)
    throw InputError("no input files given");

  config.metric.kind = parse_metric_kind(metric);
  if (kernel == "linear")
    config.metric.kernel = Kernel::linear();
  else if (kernel == "rbf")
    config.metric.kernel = Kernel::rbf(bandwidth);
  else
    throw InputError("unknown kernel '" + kernel + "'");

  if (!lambdas.empty()) {
    config.lambdas = lambdas;
    config.lambda_given = true;
  }
  for (const double l : config.lambdas)
    if (!(l >= 0.0)) throw InputError("lambda values must be >= 0");

  if (format == "json")
    config.format = OutputFormat::json;
  else if (format == "csv")
    config.format = OutputFormat::csv;
  else
    throw InputError("unknown format '" + format + "'");

  if (!output.empty()) config.output = output;
  if (!classes.empty()) config.classes = parse_classes(classes);

  if (mode == "bound")
    config.probe_mode = ProbeMode::bound;
  else if (mode == "generalization")
    config.probe_mode = ProbeMode::generalization;
  else
    throw InputError("unknown probe mode '" + mode + "'");

  config.synth.family = parse_synth_family(family);
  if (config.command == Command::synth) config.synth.validate();
  config.threads = thread_override(std::max(1u, config.threads));
  return config;
}

int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  try {
    Runner(config, out).execute();
    return 0;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::optional<RunConfig> config;
  try {
    config = parse_args(argc, argv, out);
  } catch (const Error& e) {
    err << "usage error: " << e.what() << "\n";
    return 1;
  }
  if (!config) return 0;
  return run(*config, out, err);
}

}  // namespace repsim::cli
