// forestlearn: learn / mi-matrix / score / encode / decode / simulate.
//
// Exit codes: 0 ok, 2 I/O, 3 parse, 4 corrupt stream, 5 invalid config.
// Every output file is staged and renamed into place only after the whole
// command has succeeded, so a failing run leaves nothing behind.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "forestlearn/forestlearn.hpp"

namespace fl = forestlearn;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kIo = 2, kParse = 3, kCorrupt = 4, kConfig = 5 };

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string subcommand;
  std::string input;
  std::string output;
  std::string report;
  std::string sidecar;
  std::string estimator = "j";
  std::string prior = "1/2";
  std::string edge_prior_q = "1/2";
  std::string na = "*";
  std::string delimiter = ",";
  std::uint64_t seed = 1;
  std::size_t threads = 0;
  std::string log_base;
  std::string edges;
  // simulate
  std::string model;
  std::size_t n = 1000;
  std::size_t trials = 50;
  std::string estimators = "j,k";
  std::string mask_columns;
  double mask_rate = 0.25;
  bool redundancy = false;

  // resolved
  fl::ScoreSettings settings;
  fl::EstimatorKind kind = fl::EstimatorKind::PosteriorJ;
  char delim = ',';
  std::size_t thread_count = 1;

  void resolve() {
    try {
      settings.prior = fl::Rational::parse(prior);
      settings.edge_prior_q = fl::Rational::parse(edge_prior_q);
      settings.validate();
      kind = fl::parse_estimator(estimator);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    if (delimiter == "\\t" || delimiter == "tab") delimiter = "\t";
    if (delimiter.size() != 1) throw ConfigError("delimiter must be a single character");
    delim = delimiter[0];
    if (na.empty()) throw ConfigError("na token must not be empty");
    if (!log_base.empty() && log_base != "bits" && log_base != "nats")
      throw ConfigError("log base must be 'bits' or 'nats'");
    thread_count = threads ? threads : fl::default_thread_count();
  }

  // Display scales: MI in nats and code lengths in bits unless overridden.
  double mi_scale() const { return log_base == "bits" ? 1.0 / fl::kLn2 : 1.0; }
  double code_scale_from_bits() const { return log_base == "nats" ? fl::kLn2 : 1.0; }
  std::string mi_unit() const { return log_base == "bits" ? "bits" : "nats"; }
  std::string code_unit() const { return log_base == "nats" ? "nats" : "bits"; }

  json to_json() const {
    json j{{"subcommand", subcommand},     {"input", input},         {"output", output},
           {"sidecar", sidecar},           {"estimator", estimator}, {"prior", prior},
           {"edge_prior_q", edge_prior_q}, {"na", na},               {"delimiter", delimiter},
           {"seed", seed},                 {"threads", threads},     {"log_base", log_base}};
    if (subcommand == "score" || subcommand == "encode") j["edges"] = edges;
    if (subcommand == "simulate") {
      j["model"] = model;
      j["n"] = n;
      j["trials"] = trials;
      j["estimators"] = estimators;
      j["mask_columns"] = mask_columns;
      j["mask_rate"] = mask_rate;
      j["redundancy"] = redundancy;
    }
    return j;
  }
};

json report_header(const RunConfig& cfg) {
  return {{"tool", "forestlearn"}, {"version", FORESTLEARN_VERSION}, {"seed", cfg.seed}, {"config", cfg.to_json()}};
}

// ---------------------------------------------------------------------------
// I/O

std::string read_file(const std::string& path) {
  if (path.empty()) throw ConfigError("--input is required");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error while reading '" + path + "'");
  return ss.str();
}

class Outputs {
 public:
  void add(std::string path, std::string content) { files_.emplace_back(std::move(path), std::move(content)); }
  void set_stdout(std::string content) { stdout_ = std::move(content); }

  void commit() {
    std::vector<std::string> staged;
    auto cleanup = [&] {
      for (const auto& s : staged) std::remove(s.c_str());
    };
    for (const auto& [path, content] : files_) {
      const auto tmp = path + ".partial";
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) {
        cleanup();
        throw IoError("cannot open '" + path + "' for writing");
      }
      staged.push_back(tmp);
      out.write(content.data(), static_cast<std::streamsize>(content.size()));
      out.close();
      if (!out) {
        cleanup();
        throw IoError("error while writing '" + path + "'");
      }
    }
    for (std::size_t k = 0; k < files_.size(); ++k) {
      std::error_code ec;
      std::filesystem::rename(staged[k], files_[k].first, ec);
      if (ec) {
        cleanup();
        throw IoError("cannot move output into place at '" + files_[k].first + "': " + ec.message());
      }
    }
    std::cout << stdout_;
    std::cout.flush();
  }

 private:
  std::vector<std::pair<std::string, std::string>> files_;
  std::string stdout_;
};

fl::ParseOptions parse_options(const RunConfig& cfg) {
  fl::ParseOptions opts;
  opts.delimiter = cfg.delim;
  opts.na_token = cfg.na;
  if (!cfg.sidecar.empty()) {
    json side;
    try {
      side = json::parse(read_file(cfg.sidecar));
      for (const auto& [name, decl] : side.at("columns").items()) {
        fl::ColumnDeclaration d;
        if (decl.contains("cardinality")) d.cardinality = decl.at("cardinality").get<std::size_t>();
        if (decl.contains("categories")) d.categories = decl.at("categories").get<std::vector<std::string>>();
        opts.declarations[name] = std::move(d);
      }
    } catch (const json::exception& e) {
      throw fl::ParseError(std::string("sidecar '") + cfg.sidecar + "': " + e.what());
    }
  }
  return opts;
}

fl::CategoricalTable load_table(const RunConfig& cfg) { return fl::parse_table(read_file(cfg.input), parse_options(cfg)); }

json column_report(const fl::CategoricalTable& t) {
  json cols = json::array();
  for (std::size_t c = 0; c < t.n_cols(); ++c)
    cols.push_back({{"index", c + 1},
                    {"name", t.column_names()[c]},
                    {"cardinality", t.cardinality(c)},
                    {"observed", t.observed_count(c)},
                    {"labels", t.labels(c)}});
  return cols;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// "1-2,2-3" or "{1,2},{2,3}" with 1-based vertices.
fl::Forest parse_edges(const std::string& text, std::size_t p) {
  std::vector<std::size_t> numbers;
  std::string cur;
  for (char ch : text + ",") {
    if (ch >= '0' && ch <= '9') {
      cur += ch;
    } else if (!cur.empty()) {
      numbers.push_back(std::stoul(cur));
      cur.clear();
    } else if (ch != ',' && ch != '{' && ch != '}' && ch != '-' && ch != ' ') {
      throw ConfigError("cannot read edge list '" + text + "'");
    }
  }
  if (numbers.size() % 2) throw ConfigError("edge list has an unpaired vertex");
  std::vector<fl::Edge> edges;
  for (std::size_t k = 0; k < numbers.size(); k += 2) {
    if (numbers[k] == 0 || numbers[k + 1] == 0 || numbers[k] > p || numbers[k + 1] > p || numbers[k] == numbers[k + 1])
      throw ConfigError("edge {" + std::to_string(numbers[k]) + "," + std::to_string(numbers[k + 1]) +
                        "} does not fit " + std::to_string(p) + " columns");
    edges.push_back(fl::Edge::make(numbers[k] - 1, numbers[k + 1] - 1));
  }
  try {
    return fl::Forest(p, std::move(edges));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

std::string to_dot(const fl::Forest& f, const fl::CategoricalTable& t, const fl::EstimatorWeights& w, double scale) {
  std::ostringstream out;
  out << std::setprecision(6);
  out << "graph forest {\n";
  for (std::size_t v = 0; v < t.n_cols(); ++v) out << "  n" << v + 1 << " [label=\"" << t.column_names()[v] << "\"];\n";
  for (const auto& e : f.edges())
    out << "  n" << e.u + 1 << " -- n" << e.v + 1 << " [label=\"" << w.at(e.u, e.v).value_or(0.0) * scale
        << "\"];\n";
  out << "}\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_learn(const RunConfig& cfg) {
  const auto table = load_table(cfg);
  const auto weights = fl::weight_matrix(table, cfg.kind, cfg.settings, cfg.thread_count);
  const auto forest = fl::kruskal_positive(weights);
  const double score = fl::log_forest_score(table, forest, cfg.settings);

  std::ostringstream tsv;
  tsv << std::setprecision(17) << "i\tj\tname_i\tname_j\tweight\tn_pair\n";
  json edges = json::array();
  for (const auto& e : forest.edges()) {
    const double w = weights.at(e.u, e.v).value() * cfg.mi_scale();
    tsv << e.u + 1 << '\t' << e.v + 1 << '\t' << table.column_names()[e.u] << '\t' << table.column_names()[e.v] << '\t'
        << w << '\t' << weights.n_pair(e.u, e.v) << '\n';
    edges.push_back({{"i", e.u + 1}, {"j", e.v + 1}, {"weight", w}, {"n_pair", weights.n_pair(e.u, e.v)}});
  }
  auto rep = report_header(cfg);
  rep["n"] = table.n_rows();
  rep["p"] = table.n_cols();
  rep["columns"] = column_report(table);
  rep["estimator"] = fl::to_string(cfg.kind);
  rep["weight_unit"] = cfg.mi_unit();
  rep["edges"] = edges;
  rep["forest"] = forest.to_string();
  rep["roots"] = json::array();
  for (auto r : forest.roots()) rep["roots"].push_back(r + 1);
  rep["code_length_unit"] = cfg.code_unit();
  rep["neg_log_score"] = fl::nats_to_bits(-score) * cfg.code_scale_from_bits();

  Outputs out;
  if (cfg.output.empty()) {
    out.set_stdout(dump(rep));
  } else {
    out.add(cfg.output + ".edges.tsv", tsv.str());
    out.add(cfg.output + ".dot", to_dot(forest, table, weights, cfg.mi_scale()));
    out.add(cfg.output + ".json", dump(rep));
  }
  out.commit();
  return kOk;
}

int cmd_mi_matrix(const RunConfig& cfg) {
  const auto table = load_table(cfg);
  const auto weights = fl::weight_matrix(table, cfg.kind, cfg.settings, cfg.thread_count);
  auto rep = report_header(cfg);
  rep["n"] = table.n_rows();
  rep["p"] = table.n_cols();
  rep["columns"] = column_report(table);
  rep["weight_unit"] = cfg.mi_unit();
  rep["matrix"] = weights.to_json(table.column_names(), cfg.mi_scale());

  Outputs out;
  if (cfg.output.empty()) {
    out.set_stdout(dump(rep));
  } else {
    std::ostringstream tsv, npair;
    weights.write_tsv(tsv, table.column_names(), cfg.mi_scale());
    for (std::size_t j = 0; j < table.n_cols(); ++j) npair << '\t' << table.column_names()[j];
    npair << '\n';
    for (std::size_t i = 0; i < table.n_cols(); ++i) {
      npair << table.column_names()[i];
      for (std::size_t j = 0; j < table.n_cols(); ++j)
        npair << '\t' << (i == j ? table.observed_count(i) : weights.n_pair(i, j));
      npair << '\n';
    }
    out.add(cfg.output + ".tsv", tsv.str());
    out.add(cfg.output + ".npair.tsv", npair.str());
    out.add(cfg.output + ".json", dump(rep));
  }
  out.commit();
  return kOk;
}

fl::Forest chosen_forest(const RunConfig& cfg, const fl::CategoricalTable& table) {
  if (!cfg.edges.empty()) return parse_edges(cfg.edges, table.n_cols());
  return fl::learn_forest(table, cfg.kind, cfg.settings, cfg.thread_count);
}

int cmd_score(const RunConfig& cfg) {
  const auto table = load_table(cfg);
  const auto forest = chosen_forest(cfg, table);
  const auto dl = fl::description_length(table, forest, cfg.settings);
  const double code = cfg.code_scale_from_bits();
  json edges = json::array();
  for (const auto& e : forest.edges()) {
    const auto pc = fl::pair_counts(table, e.u, e.v);
    json entry{{"i", e.u + 1}, {"j", e.v + 1}, {"n_pair", pc.n_pair}};
    entry["j_weight"] = table.n_rows() ? json(fl::j_weight(pc, table.n_rows(), cfg.settings) * cfg.mi_scale()) : json();
    entry["k_weight"] = pc.n_pair ? json(fl::k_weight(pc, cfg.settings) * cfg.mi_scale()) : json();
    edges.push_back(entry);
  }
  auto rep = report_header(cfg);
  rep["n"] = table.n_rows();
  rep["p"] = table.n_cols();
  rep["columns"] = column_report(table);
  rep["forest"] = forest.to_string();
  rep["forest_source"] = cfg.edges.empty() ? "learned:" + std::string(fl::to_string(cfg.kind)) : "given";
  rep["edges"] = edges;
  rep["weight_unit"] = cfg.mi_unit();
  rep["code_length_unit"] = cfg.code_unit();
  rep["log_prior"] = fl::nats_to_bits(fl::log_forest_prior(table.n_cols(), forest.edges().size(), cfg.settings)) * code;
  rep["description_length"] = dl.exact_bits() * code;
  rep["description_length_asymptotic"] = dl.asymptotic_bits() * code;
  if (table.n_rows()) rep["description_length_per_sample"] = dl.exact_bits() * code / static_cast<double>(table.n_rows());

  Outputs out;
  if (cfg.output.empty())
    out.set_stdout(dump(rep));
  else
    out.add(cfg.output, dump(rep));
  out.commit();
  return kOk;
}

int cmd_encode(const RunConfig& cfg) {
  if (cfg.output.empty()) throw ConfigError("encode needs --output for the container");
  const auto table = load_table(cfg);
  const auto forest = chosen_forest(cfg, table);
  const auto frame = fl::encode(table, forest, cfg.settings, cfg.na);
  const auto bytes = frame.to_bytes();
  const auto closed = fl::value_code_length(table, forest, cfg.settings.pseudo_count());
  const auto dl = fl::description_length(table, forest, cfg.settings);
  const auto [vertex_pen, edge_pen] = fl::penalty_terms_bits(table, forest);

  // plug-in conditional entropy along the coded forest, bits
  double plugin = 0.0;
  for (std::size_t i = 0; i < table.n_cols(); ++i)
    plugin += static_cast<double>(table.observed_count(i)) * fl::empirical_entropy(fl::column_counts(table, i));
  for (const auto& e : forest.edges()) {
    const auto pc = fl::pair_counts(table, e.u, e.v);
    if (pc.n_pair) plugin -= static_cast<double>(pc.n_pair) * fl::empirical_mi(pc);
  }
  plugin = fl::nats_to_bits(plugin);

  const double n = static_cast<double>(table.n_rows());
  const double code = cfg.code_scale_from_bits();
  const double value_bits = 8.0 * static_cast<double>(frame.value_payload.size());
  auto per = [&](double bits) { return n > 0 ? json(bits * code / n) : json(); };
  auto rep = report_header(cfg);
  rep["n"] = table.n_rows();
  rep["p"] = table.n_cols();
  rep["columns"] = column_report(table);
  rep["forest"] = forest.to_string();
  rep["code_length_unit"] = cfg.code_unit();
  rep["bytes"] = {{"total", bytes.size()},
                  {"header", frame.header_bytes()},
                  {"mask", frame.mask_payload.size()},
                  {"value", frame.value_payload.size()}};
  rep["lengths"] = {{"total", 8.0 * static_cast<double>(bytes.size()) * code},
                    {"mask", 8.0 * static_cast<double>(frame.mask_payload.size()) * code},
                    {"value", value_bits * code},
                    {"mask_ideal", frame.mask_ideal_bits * code},
                    {"value_ideal", frame.value_ideal_bits * code},
                    {"neg_log_r", -closed.log2_r * code},
                    {"parent_measure_correction", closed.correction_bits * code},
                    {"description_length", dl.exact_bits() * code},
                    {"description_length_asymptotic", dl.asymptotic_bits() * code}};
  rep["per_sample"] = {{"total", per(8.0 * static_cast<double>(bytes.size()))},
                       {"value", per(value_bits)},
                       {"mask", per(8.0 * static_cast<double>(frame.mask_payload.size()))},
                       {"plugin_conditional_entropy", per(plugin)},
                       {"value_excess_over_plugin", per(value_bits - plugin)},
                       {"penalty_bound", n > 0 ? json((vertex_pen + edge_pen) * code) : json()},
                       {"penalty_bound_minus_form", n > 0 ? json((vertex_pen - edge_pen) * code) : json()}};

  Outputs out;
  out.add(cfg.output, std::string(bytes.begin(), bytes.end()));
  if (cfg.report.empty())
    out.set_stdout(dump(rep));
  else
    out.add(cfg.report, dump(rep));
  out.commit();
  return kOk;
}

int cmd_decode(const RunConfig& cfg) {
  const auto raw = read_file(cfg.input);
  const std::vector<std::uint8_t> bytes(raw.begin(), raw.end());
  const auto frame = fl::CodedFrame::from_bytes(bytes);
  const auto table = fl::decode(frame);
  const auto csv = fl::serialize_table(table, cfg.delim, frame.header.na_token);
  Outputs out;
  if (cfg.output.empty())
    out.set_stdout(csv);
  else
    out.add(cfg.output, csv);
  if (!cfg.report.empty()) {
    auto rep = report_header(cfg);
    rep["n"] = table.n_rows();
    rep["p"] = table.n_cols();
    rep["forest"] = fl::Forest(table.n_cols(), frame.header.edges).to_string();
    rep["prior"] = frame.header.prior.str();
    rep["edge_prior_q"] = frame.header.edge_prior_q.str();
    out.add(cfg.report, dump(rep));
  }
  out.commit();
  return kOk;
}

std::vector<double> parse_doubles(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("not a number: '" + item + "'");
    }
  }
  return out;
}

// Model file (JSON), or "example2:EPS:DELTA", or "seven-vertex[:q1,...,q7]".
fl::ForestModel load_model(const std::string& spec) {
  try {
    if (spec.rfind("example2:", 0) == 0) {
      const auto rest = spec.substr(9);
      const auto colon = rest.find(':');
      if (colon == std::string::npos) throw ConfigError("expected example2:EPS:DELTA");
      return fl::example2_model(parse_doubles(rest.substr(0, colon)).at(0), parse_doubles(rest.substr(colon + 1)).at(0));
    }
    if (spec == "seven-vertex") return fl::seven_vertex_model();
    if (spec.rfind("seven-vertex:", 0) == 0) return fl::seven_vertex_model(parse_doubles(spec.substr(13)));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  } catch (const std::out_of_range& e) {
    throw ConfigError(e.what());
  }
  const auto text = read_file(spec);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw fl::ParseError("model '" + spec + "': " + e.what());
  }
  try {
    return fl::ForestModel::from_json(j);
  } catch (const json::exception& e) {
    throw fl::ParseError("model '" + spec + "': " + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError("model '" + spec + "': " + e.what());
  }
}

int cmd_simulate(const RunConfig& cfg) {
  if (cfg.trials == 0) throw ConfigError("--trials must be at least 1");
  std::vector<fl::EstimatorKind> kinds;
  {
    std::stringstream ss(cfg.estimators);
    std::string item;
    try {
      while (std::getline(ss, item, ',')) kinds.push_back(fl::parse_estimator(item));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    if (kinds.empty()) throw ConfigError("no estimators given");
  }
  if (cfg.model.empty() == cfg.input.empty()) throw ConfigError("simulate needs exactly one of --model or --input");

  std::vector<std::vector<fl::EstimatorWeights>> per_trial;
  fl::TrialReport trials;
  auto rep = report_header(cfg);
  if (!cfg.model.empty()) {
    const auto model = load_model(cfg.model);
    trials = fl::run_trials(model, cfg.n, cfg.trials, kinds, cfg.seed, cfg.settings, cfg.thread_count, &per_trial);
    rep["model"] = model.to_json();
    const fl::SourceSpec spec(model);
    rep["source"] = {{"conditional_entropy_bits", fl::nats_to_bits(fl::conditional_entropy(spec))},
                     {"conditional_forest", fl::source_chow_liu(spec, true).to_string()},
                     {"complete_data_forest", fl::source_chow_liu(spec, false).to_string()}};
    if (cfg.redundancy) {
      if (cfg.n == 0) throw ConfigError("redundancy needs --n >= 1");
      rep["redundancy"] = fl::redundancy_report(spec, cfg.n, cfg.trials, cfg.seed, cfg.settings, cfg.thread_count).to_json();
    }
  } else {
    if (cfg.redundancy) throw ConfigError("--redundancy needs a --model");
    const auto table = load_table(cfg);
    std::vector<std::size_t> columns;
    for (double c : parse_doubles(cfg.mask_columns.empty() ? "" : cfg.mask_columns)) {
      if (c < 1 || c > static_cast<double>(table.n_cols()) || c != std::floor(c))
        throw ConfigError("mask column out of range");
      columns.push_back(static_cast<std::size_t>(c) - 1);
    }
    if (!(cfg.mask_rate >= 0.0 && cfg.mask_rate <= 1.0)) throw ConfigError("--mask-rate must lie in [0,1]");
    trials = fl::run_masking_trials(table, cfg.n, columns, cfg.mask_rate, cfg.trials, kinds, cfg.seed, cfg.settings,
                                    cfg.thread_count);
    rep["columns"] = column_report(table);
  }
  rep["weight_unit"] = cfg.mi_unit();
  rep["trials"] = trials.to_json(cfg.mi_scale());

  Outputs out;
  if (cfg.output.empty()) {
    out.set_stdout(dump(rep));
  } else {
    std::ostringstream tsv;
    trials.write_tsv(tsv);
    out.add(cfg.output + ".json", dump(rep));
    out.add(cfg.output + ".tsv", tsv.str());
    if (!per_trial.empty()) {
      std::ostringstream lng;
      lng << std::setprecision(17);
      trials.write_long_tsv(lng, per_trial);
      out.add(cfg.output + ".long.tsv", lng.str());
    }
  }
  out.commit();
  return kOk;
}

void add_common(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--input,-i", cfg.input, "input table (CSV/TSV) or container");
  sub->add_option("--output,-o", cfg.output, "output path or prefix; stdout when omitted");
  sub->add_option("--estimator", cfg.estimator, "empirical | penalized | j | k");
  sub->add_option("--prior", cfg.prior, "Dirichlet pseudo-count as a rational, e.g. 1/2");
  sub->add_option("--edge-prior-q", cfg.edge_prior_q, "prior probability that a pair is independent");
  sub->add_option("--na", cfg.na, "missing-value token");
  sub->add_option("--delimiter", cfg.delimiter, "field delimiter (\\t for tab)");
  sub->add_option("--sidecar", cfg.sidecar, "JSON column declarations");
  sub->add_option("--seed", cfg.seed, "random seed");
  sub->add_option("--threads", cfg.threads, "worker threads (0: FORESTLEARN_THREADS or all cores)");
  sub->add_option("--log-base", cfg.log_base, "display unit: bits | nats");
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  CLI::App app{"Forest structure learning and coding for categorical data with missing values"};
  app.set_version_flag("--version", FORESTLEARN_VERSION);
  app.require_subcommand(1);

  auto* learn = app.add_subcommand("learn", "learn a forest and write its edge list");
  auto* mi = app.add_subcommand("mi-matrix", "write the pairwise weight matrix");
  auto* score = app.add_subcommand("score", "score a forest (given by --edges, else learned)");
  auto* enc = app.add_subcommand("encode", "compress a table into an FLC1 container");
  auto* dec = app.add_subcommand("decode", "restore a table from an FLC1 container");
  auto* sim = app.add_subcommand("simulate", "repeated-trial structure recovery experiment");
  for (auto* sub : {learn, mi, score, enc, dec, sim}) add_common(sub, cfg);
  for (auto* sub : {score, enc}) sub->add_option("--edges", cfg.edges, "forest as 1-based pairs, e.g. 1-2,2-3");
  for (auto* sub : {enc, dec}) sub->add_option("--report", cfg.report, "write the JSON report here");
  sim->add_option("--model", cfg.model, "model JSON, example2:EPS:DELTA or seven-vertex[:rates]");
  sim->add_option("--n", cfg.n, "rows per trial");
  sim->add_option("--trials", cfg.trials, "number of trials");
  sim->add_option("--estimators", cfg.estimators, "comma-separated estimator list");
  sim->add_option("--mask-columns", cfg.mask_columns, "1-based columns to mask (with --input)");
  sim->add_option("--mask-rate", cfg.mask_rate, "per-cell masking probability (with --input)");
  sim->add_flag("--redundancy", cfg.redundancy, "also encode each frame and report redundancy");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    cfg.subcommand = app.get_subcommands().front()->get_name();
    cfg.resolve();
    if (cfg.subcommand == "learn") return cmd_learn(cfg);
    if (cfg.subcommand == "mi-matrix") return cmd_mi_matrix(cfg);
    if (cfg.subcommand == "score") return cmd_score(cfg);
    if (cfg.subcommand == "encode") return cmd_encode(cfg);
    if (cfg.subcommand == "decode") return cmd_decode(cfg);
    return cmd_simulate(cfg);
  } catch (const IoError& e) {
    std::cerr << "forestlearn: I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const fl::ParseError& e) {
    std::cerr << "forestlearn: parse error";
    if (e.line()) std::cerr << " at line " << e.line();
    std::cerr << ": " << e.what() << '\n';
    return kParse;
  } catch (const fl::CorruptStream& e) {
    std::cerr << "forestlearn: corrupt container: " << e.what() << '\n';
    return kCorrupt;
  } catch (const ConfigError& e) {
    std::cerr << "forestlearn: invalid configuration: " << e.what() << '\n';
    return kConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "forestlearn: invalid configuration: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "forestlearn: " << e.what() << '\n';
    return 1;
  }
}
