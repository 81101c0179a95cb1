#include "ucs/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <iomanip>
#include <sstream>

#include "ucs/rng.hpp"

namespace ucs {
namespace fs = std::filesystem;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ConfigError:
    case ErrorKind::InvalidArgument:
      return 2;
    case ErrorKind::MissingInput:
    case ErrorKind::IoError:
    case ErrorKind::ParseError:
    case ErrorKind::BadMagic:
    case ErrorKind::DimensionOverflow:
    case ErrorKind::NonFiniteValue:
    case ErrorKind::EmptyMask:
    case ErrorKind::MisalignedSources:
    case ErrorKind::IndexOutOfRange:
      return 3;
    case ErrorKind::TooFewRows:
    case ErrorKind::DegenerateInput:
    case ErrorKind::TooFewPoints:
    case ErrorKind::SingularKernel:
    case ErrorKind::EmptyCandidateList:
      return 4;
  }
  return 4;
}

// --- Config ------------------------------------------------------------------

const std::vector<ConfigKey>& Config::keys() {
  static const std::vector<ConfigKey> table = {
      {"base", "votek", "base selector: dpp, votek or subset_utility"},
      {"budget", "10", "demonstrations per selection (B)"},
      {"candidate_num", "50", "candidate subsets per query (subset_utility)"},
      {"clustering_method", "dict_dbscan", "dict_dbscan, dbscan or dict_argmax"},
      {"dbscan_eps", "", "fixed eps; unset uses the k-NN quantile heuristic"},
      {"dbscan_k", "20", "neighbour rank for the eps heuristic"},
      {"dbscan_min_samples", "1", "DBSCAN core threshold, self included"},
      {"dbscan_q", "0.01", "quantile of k-NN distances used as eps"},
      {"dict_alpha", "10", "ridge penalty of the dictionary codes"},
      {"dict_max_iter", "50", "dictionary alternation sweeps"},
      {"dict_n_components", "64", "dictionary atoms (K)"},
      {"dict_pca_dim", "128", "PCA dimension before dictionary learning, 0 disables"},
      {"dict_tolerance", "1e-6", "relative objective change that stops the fit"},
      {"dpp_scale_factor", "0.1", "kernel exp(scale * cosine)"},
      {"l2_normalize", "0", "l2-normalize rows after preprocessing"},
      {"n_runs", "1", "selection repeats with seeds seed..seed+n_runs-1"},
      {"pooling", "mean", "token pooling for bundle input: mean, first or last"},
      {"prior_epsilon", "1e-6", "epsilon in the corpus prior weights"},
      {"prior_smoothing", "power_law", "corpus spectrum smoothing: power_law or off"},
      {"seed", "0", "RNG seed"},
      {"sgt_bin_size", "20", "truncation bin M"},
      {"sgt_k0", "", "override for the binomial weight order k0"},
      {"sgt_lambda", "0", "coverage regularization strength"},
      {"sgt_offset", "1", "binomial weight offset alpha"},
      {"sgt_smoothing", "off", "subset spectrum smoothing: power_law or off"},
      {"sgt_t", "5", "expansion factor t"},
      {"standardize", "1", "z-score columns before PCA"},
      {"votek_discount_base", "10", "VoteK vote discount base"},
      {"votek_k", "3", "VoteK neighbours"},
  };
  return table;
}

const ConfigKey& Config::key(const std::string& name) {
  for (const auto& k : keys())
    if (k.name == name) return k;
  throw Error(ErrorKind::ConfigError, "unknown config key '" + name + "'");
}

Config Config::parse(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorKind::ConfigError, "line " + std::to_string(lineno) + ": expected key=value");
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

Config Config::load(const fs::path& path) { return parse(read_file(path)); }

void Config::set(const std::string& name, const std::string& value) {
  key(name);
  values_[name] = value;
}

bool Config::has(const std::string& name) const { return !get(name).empty(); }

std::string Config::get(const std::string& name) const {
  const auto it = values_.find(name);
  return it != values_.end() ? it->second : key(name).fallback;
}

double Config::real(const std::string& name) const {
  const std::string v = get(name);
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out))
    throw Error(ErrorKind::ConfigError, name + ": expected a number, got '" + v + "'");
  return out;
}

Index Config::integer(const std::string& name) const {
  const std::string v = get(name);
  Index out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size())
    throw Error(ErrorKind::ConfigError, name + ": expected an integer, got '" + v + "'");
  return out;
}

bool Config::flag(const std::string& name) const {
  const std::string v = get(name);
  if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "off" || v == "no") return false;
  throw Error(ErrorKind::ConfigError, name + ": expected a boolean, got '" + v + "'");
}

std::optional<double> Config::optional_real(const std::string& name) const {
  if (!has(name)) return std::nullopt;
  return real(name);
}

std::optional<Index> Config::optional_integer(const std::string& name) const {
  if (!has(name)) return std::nullopt;
  return integer(name);
}

std::map<std::string, std::string> Config::effective() const {
  std::map<std::string, std::string> out;
  for (const auto& k : keys()) out[k.name] = get(k.name);
  return out;
}

std::string Config::to_string() const {
  std::string out;
  for (const auto& [k, v] : effective()) out += k + "=" + v + "\n";
  return out;
}

namespace {

Index positive(const Config& cfg, const std::string& name) {
  const Index v = cfg.integer(name);
  if (v < 1) throw Error(ErrorKind::ConfigError, name + " must be >= 1");
  return v;
}

double non_negative(const Config& cfg, const std::string& name) {
  const double v = cfg.real(name);
  if (v < 0.0) throw Error(ErrorKind::ConfigError, name + " must be >= 0");
  return v;
}

template <typename Fn>
auto as_config_error(const std::string& name, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ConfigError) throw;
    throw Error(ErrorKind::ConfigError, name + ": " + e.what());
  }
}

}  // namespace

PreprocessOptions preprocess_options(const Config& cfg) {
  PreprocessOptions o;
  o.standardize = cfg.flag("standardize");
  o.pca_dim = cfg.integer("dict_pca_dim");
  if (o.pca_dim < 0) throw Error(ErrorKind::ConfigError, "dict_pca_dim must be >= 0");
  o.l2_normalize = cfg.flag("l2_normalize");
  return o;
}

DictionaryOptions dictionary_options(const Config& cfg) {
  DictionaryOptions o;
  o.n_atoms = positive(cfg, "dict_n_components");
  o.ridge_alpha = cfg.real("dict_alpha");
  if (o.ridge_alpha <= 0.0) throw Error(ErrorKind::ConfigError, "dict_alpha must be > 0");
  o.max_iter = static_cast<int>(cfg.integer("dict_max_iter"));
  if (o.max_iter < 0) throw Error(ErrorKind::ConfigError, "dict_max_iter must be >= 0");
  o.tolerance = non_negative(cfg, "dict_tolerance");
  o.seed = static_cast<std::uint64_t>(cfg.integer("seed"));
  return o;
}

DbscanParams dbscan_params(const Config& cfg) {
  DbscanParams p;
  p.k = positive(cfg, "dbscan_k");
  p.q = cfg.real("dbscan_q");
  if (p.q < 0.0 || p.q > 1.0) throw Error(ErrorKind::ConfigError, "dbscan_q must lie in [0, 1]");
  p.min_samples = positive(cfg, "dbscan_min_samples");
  p.eps_override = cfg.optional_real("dbscan_eps");
  return p;
}

ClusterMethod cluster_method(const Config& cfg) {
  return as_config_error("clustering_method", [&] { return parse_cluster_method(cfg.get("clustering_method")); });
}

SgtConfig sgt_config(const Config& cfg) {
  SgtConfig s;
  s.t = cfg.real("sgt_t");
  if (s.t <= 0.0) throw Error(ErrorKind::ConfigError, "sgt_t must be > 0");
  s.bin_size = positive(cfg, "sgt_bin_size");
  s.offset = cfg.real("sgt_offset");
  if (s.offset <= 0.0) throw Error(ErrorKind::ConfigError, "sgt_offset must be > 0");
  s.smoothing = as_config_error("sgt_smoothing", [&] { return parse_smoothing(cfg.get("sgt_smoothing")); });
  s.k0_override = cfg.optional_integer("sgt_k0");
  if (s.k0_override && *s.k0_override < 0) throw Error(ErrorKind::ConfigError, "sgt_k0 must be >= 0");
  return s;
}

SelectionConfig selection_config(const Config& cfg) {
  SelectionConfig s;
  s.budget = positive(cfg, "budget");
  s.lambda = non_negative(cfg, "sgt_lambda");
  s.base = as_config_error("base", [&] { return parse_base_selector(cfg.get("base")); });
  s.dpp_scale_factor = cfg.real("dpp_scale_factor");
  s.votek_k = positive(cfg, "votek_k");
  s.votek_discount_base = cfg.real("votek_discount_base");
  if (s.votek_discount_base <= 0.0) throw Error(ErrorKind::ConfigError, "votek_discount_base must be > 0");
  s.candidate_num = positive(cfg, "candidate_num");
  s.sgt = sgt_config(cfg);
  s.seed = static_cast<std::uint64_t>(cfg.integer("seed"));
  return s;
}

// --- Manifests -----------------------------------------------------------------

RunManifest stage_manifest(const Config& cfg, const std::string& stage) {
  RunManifest m;
  for (const auto& [k, v] : cfg.effective()) m.set("config." + k, v);
  m.set("seed", cfg.get("seed"));
  m.set("stage", stage);
  std::string created;
  if (const char* sde = std::getenv("SOURCE_DATE_EPOCH"); sde && *sde) {
    created = sde;
  } else {
    created = std::to_string(static_cast<long long>(std::time(nullptr)));
  }
  m.set("created", created);
  return m;
}

void record_input(RunManifest& manifest, const std::string& name, const fs::path& path, const std::string& shown) {
  const std::string label = shown.empty() ? path.string() : shown;
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(path))
      if (entry.is_regular_file()) files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    std::string joined;
    for (const auto& f : files) joined += f.filename().string() + ":" + content_hash(f) + "\n";
    manifest.set("input." + name, label);
    manifest.set("input." + name + ".hash", content_hash_bytes(joined));
    return;
  }
  manifest.set("input." + name, label);
  manifest.set("input." + name + ".hash", content_hash(path));
}

void record_output(RunManifest& manifest, const std::string& name, const fs::path& path) {
  manifest.set("output." + name, path.filename().string());
  manifest.set("output." + name + ".hash", content_hash(path));
}

// --- Tables --------------------------------------------------------------------

IndexSet read_subset(const fs::path& path, Index rows) {
  IndexSet out;
  if (path.empty()) {
    out.resize(static_cast<std::size_t>(rows));
    for (Index i = 0; i < rows; ++i) out[static_cast<std::size_t>(i)] = i;
    return out;
  }
  const LabelVector raw = parse_labels(read_file(path));
  for (Label v : raw) {
    if (v < 0 || v >= rows) throw Error(ErrorKind::IndexOutOfRange, "subset index " + std::to_string(v));
    out.push_back(static_cast<Index>(v));
  }
  return out;
}

std::string spectrum_table(const SubsetSpectrum& s) {
  std::ostringstream out;
  out << std::setw(6) << "s" << std::setw(10) << "f_s" << "\n";
  for (std::size_t k = 1; k < s.f.size(); ++k) {
    if (s.f[k] == 0.0) continue;
    out << std::setw(6) << k << std::setw(10) << format_real(s.f[k]) << "\n";
  }
  out << "# size=" << s.size << " excluded=" << s.excluded << " k_seen=" << s.k_seen() << "\n";
  return out.str();
}

std::string estimate_table(const SubsetSpectrum& s, const SgtConfig& cfg) {
  const Coverage c = coverage_from_spectrum(s, cfg);
  const double gt = gt_unseen(s.f, cfg.t, cfg.bin_size);
  const Index k0 = cfg.k0_override ? *cfg.k0_override : sgt_k0(cfg.t, s.size);
  std::ostringstream out;
  const auto row = [&](const std::string& k, const std::string& v) {
    out << std::left << std::setw(10) << k << std::right << std::setw(24) << v << "\n";
  };
  row("size", std::to_string(s.size));
  row("k_seen", std::to_string(c.k_seen));
  row("k0", std::to_string(k0));
  row("gt_raw", format_real(gt));
  row("u_hat", format_real(c.u_hat));
  row("phi", format_real(c.phi));
  return out.str();
}

std::string prior_csv(const CorpusPrior& prior) {
  std::string out = "cluster,size,s_star,mass,weight\n";
  for (const auto& [label, size] : prior.sizes) {
    const auto s = static_cast<std::size_t>(size);
    out += std::to_string(label) + "," + std::to_string(size) + "," + format_real(prior.s_star[s]) + "," +
           format_real(prior.mass[s]) + "," + format_real(prior.weights.at(label)) + "\n";
  }
  return out;
}

std::string selection_csv(const std::vector<TaggedSelection>& selections, const std::vector<std::string>& tag_names) {
  std::string out;
  for (const auto& t : tag_names) out += t + ",";
  out += "step,index,base_gain,coverage_term,total\n";
  for (const auto& sel : selections) {
    if (sel.tags.size() != tag_names.size()) throw Error(ErrorKind::InvalidArgument, "tag count mismatch");
    std::string prefix;
    for (Index t : sel.tags) prefix += std::to_string(t) + ",";
    for (std::size_t k = 0; k < sel.result.steps.size(); ++k) {
      const auto& st = sel.result.steps[k];
      out += prefix + std::to_string(k) + "," + std::to_string(st.index) + "," + format_real(st.base_gain) + "," +
             format_real(st.coverage_term) + "," + format_real(st.total) + "\n";
    }
  }
  return out;
}

std::vector<IndexSet> read_selection_csv(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::ParseError, path.string() + ": empty selection file");
  std::vector<std::string> header;
  {
    std::istringstream h(line);
    std::string cell;
    while (std::getline(h, cell, ',')) header.push_back(cell);
  }
  const auto step_it = std::find(header.begin(), header.end(), "step");
  const auto index_it = std::find(header.begin(), header.end(), "index");
  if (step_it == header.end() || index_it == header.end())
    throw Error(ErrorKind::ParseError, path.string() + ": missing step/index columns");
  const auto n_tags = static_cast<std::size_t>(step_it - header.begin());
  const auto index_col = static_cast<std::size_t>(index_it - header.begin());

  std::vector<IndexSet> out;
  std::string current_key;
  bool first = true;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream r(line);
    std::string cell;
    while (std::getline(r, cell, ',')) cells.push_back(cell);
    if (cells.size() != header.size())
      throw Error(ErrorKind::ParseError, path.string() + ": line " + std::to_string(lineno) + ": wrong column count");
    std::string key;
    for (std::size_t k = 0; k < n_tags; ++k) key += cells[k] + ",";
    if (first || key != current_key) {
      out.emplace_back();
      current_key = key;
      first = false;
    }
    Index idx = 0;
    const std::string& v = cells[index_col];
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), idx);
    if (ec != std::errc() || ptr != v.data() + v.size())
      throw Error(ErrorKind::ParseError, path.string() + ": line " + std::to_string(lineno) + ": bad index");
    out.back().push_back(idx);
  }
  return out;
}

std::vector<SelectionResult> run_selection(const Matrix& pool, const LabelVector& labels, const Matrix* queries,
                                           const SelectionConfig& cfg, Smoothing prior_smoothing, double prior_epsilon) {
  if (static_cast<Index>(labels.size()) != pool.rows())
    throw Error(ErrorKind::MisalignedSources, "labels and embeddings have different row counts");
  std::vector<SelectionResult> out;
  switch (cfg.base) {
    case BaseSelector::Votek: {
      const CorpusPrior prior = corpus_prior(labels, prior_smoothing, prior_epsilon, cfg.sgt.noise_label);
      out.push_back(votek_ucs_select(pool, labels, prior, cfg));
      break;
    }
    case BaseSelector::Dpp: {
      const Matrix kernel = dpp_kernel(pool, cfg.dpp_scale_factor);
      out.push_back(greedy_dpp_ucs(kernel, labels, cfg));
      break;
    }
    case BaseSelector::SubsetUtility: {
      if (queries == nullptr) throw Error(ErrorKind::MissingInput, "subset_utility needs query embeddings");
      if (queries->cols() != pool.cols())
        throw Error(ErrorKind::DimensionOverflow, "query width differs from pool width");
      for (Index q = 0; q < queries->rows(); ++q) {
        const Vector query = queries->row(q).transpose();
        const auto candidates = propose_candidates(pool, query, cfg.budget, std::min(cfg.candidate_num, pool.rows()),
                                                   derive_seed(cfg.seed, static_cast<std::uint64_t>(q)));
        std::vector<double> utilities;
        utilities.reserve(candidates.size());
        for (const auto& c : candidates) utilities.push_back(synthetic_utility(pool, query, c));
        out.push_back(subset_utility_ucs(candidates, utilities, labels, cfg));
      }
      break;
    }
  }
  return out;
}

std::string exposure_table(const ExposureReport& rep, const ClusterStats& stats) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(3);
  out << std::left << std::setw(20) << "metric" << std::right << std::setw(12) << "mean" << std::setw(12) << "std"
      << "\n";
  const auto row = [&](const std::string& name, double m, double s) {
    out << std::left << std::setw(20) << name << std::right << std::setw(12) << m << std::setw(12) << s << "\n";
  };
  row("uniq_clusters", rep.uniq_clusters, rep.uniq_clusters_std);
  row("mean_cluster_size", rep.mean_cluster_size, rep.mean_cluster_size_std);
  row("mean_inv_size", rep.mean_inv_size, rep.mean_inv_size_std);
  out << "selections " << rep.selections << "\n\n";
  out << std::left << std::setw(20) << "cluster_size" << std::right << std::setw(12) << "mass" << "\n";
  for (std::size_t k = 0; k < stats.mass.size(); ++k)
    out << std::left << std::setw(20) << (k + 1) << std::right << std::setw(12) << stats.mass[k] << "\n";
  out << std::left << std::setw(20) << ">8" << std::right << std::setw(12) << stats.mass_over << "\n";
  out << "clusters " << stats.clusters << "\ntop_sizes";
  for (Index s : stats.top_sizes) out << " " << s;
  out << "\n";
  return out.str();
}

std::string oracle_csv(const std::vector<std::pair<double, OracleReport>>& rows) {
  std::string out =
      "t,trials,extra_draws,mean_new,std_new,mean_sgt,mae_sgt,mean_gt,mae_gt,mae_gt_raw\n";
  for (const auto& [t, r] : rows) {
    out += format_real(t) + "," + std::to_string(r.trials) + "," + std::to_string(r.extra_draws) + "," +
           format_real(r.mean_new) + "," + format_real(r.std_new) + "," + format_real(r.mean_estimate) + "," +
           format_real(r.mean_abs_error) + "," + format_real(r.mean_gt_estimate) + "," +
           format_real(r.mean_abs_error_gt) + "," + format_real(r.mean_abs_error_gt_raw) + "\n";
  }
  return out;
}

// --- Pipeline ------------------------------------------------------------------

namespace {

const std::vector<std::string> kStageNames = {"preprocess", "dictionary", "cluster", "prior", "select", "analyze"};

fs::path need(const fs::path& p) {
  if (!fs::exists(p)) throw Error(ErrorKind::MissingInput, p.string() + " not found");
  return p;
}

Matrix load_pool_input(const fs::path& input, const Config& cfg) {
  need(input);
  if (fs::is_directory(input)) {
    const Pooling mode = as_config_error("pooling", [&] { return parse_pooling(cfg.get("pooling")); });
    const auto bundles = read_token_bundles(input);
    return pool_bundles(bundles, mode);
  }
  return read_matrix(input);
}

void stage_preprocess(const Config& cfg, const PipelineIO& io) {
  RunManifest m = stage_manifest(cfg, "preprocess");
  const Matrix raw = load_pool_input(io.input, cfg);
  record_input(m, "embeddings", io.input);
  const PreprocessModel model = PreprocessModel::fit(raw, preprocess_options(cfg));
  const fs::path out = io.out_dir / "embeddings.ucsm";
  write_matrix(model.apply(raw), out);
  model.save(io.out_dir / "preprocess");
  record_output(m, "embeddings", out);
  m.write(io.out_dir / "preprocess.manifest");
}

void stage_dictionary(const Config& cfg, const PipelineIO& io) {
  RunManifest m = stage_manifest(cfg, "dictionary");
  const fs::path in = need(io.out_dir / "embeddings.ucsm");
  record_input(m, "embeddings", in, in.filename().string());
  const Matrix e = read_matrix(in);
  const CodeBook book = fit_dictionary(e, dictionary_options(cfg));
  book.save(io.out_dir / "dictionary");
  const fs::path codes = io.out_dir / "codes.ucsm";
  write_matrix(ridge_encode(book, e), codes);
  record_output(m, "dictionary", io.out_dir / "dictionary.ucsm");
  record_output(m, "codes", codes);
  m.set("dictionary.objective", format_real(book.objective));
  m.set("dictionary.iterations", std::to_string(book.iterations));
  m.write(io.out_dir / "dictionary.manifest");
}

void stage_cluster(const Config& cfg, const PipelineIO& io) {
  RunManifest m = stage_manifest(cfg, "cluster");
  const ClusterMethod method = cluster_method(cfg);
  const fs::path in = need(io.out_dir / (method == ClusterMethod::Dbscan ? "embeddings.ucsm" : "codes.ucsm"));
  record_input(m, "features", in, in.filename().string());
  const Matrix x = read_matrix(in);
  const ClusterAssignment a =
      method == ClusterMethod::DictArgmax ? argmax_atoms(x) : cluster_dbscan(x, dbscan_params(cfg), method);
  const fs::path labels = io.out_dir / "labels.txt";
  write_labels(a.labels, labels);
  std::string report = "method=" + to_string(a.method) + "\neps=" + format_real(a.eps) +
                       "\nclusters=" + std::to_string(a.cluster_count()) + "\n";
  write_file(io.out_dir / "cluster.txt", report);
  record_output(m, "labels", labels);
  m.set("cluster.eps", format_real(a.eps));
  m.set("cluster.count", std::to_string(a.cluster_count()));
  m.write(io.out_dir / "cluster.manifest");
}

void stage_prior(const Config& cfg, const PipelineIO& io) {
  RunManifest m = stage_manifest(cfg, "prior");
  const fs::path in = need(io.out_dir / "labels.txt");
  record_input(m, "labels", in, in.filename().string());
  const Smoothing sm = as_config_error("prior_smoothing", [&] { return parse_smoothing(cfg.get("prior_smoothing")); });
  const CorpusPrior prior = corpus_prior(read_labels(in), sm, cfg.real("prior_epsilon"));
  const fs::path out = io.out_dir / "prior.csv";
  write_file(out, prior_csv(prior));
  record_output(m, "prior", out);
  m.write(io.out_dir / "prior.manifest");
}

void stage_select(const Config& cfg, const PipelineIO& io) {
  RunManifest m = stage_manifest(cfg, "select");
  const fs::path labels_path = need(io.out_dir / "labels.txt");
  const fs::path emb_path = need(io.out_dir / "embeddings.ucsm");
  record_input(m, "labels", labels_path, labels_path.filename().string());
  record_input(m, "embeddings", emb_path, emb_path.filename().string());
  const LabelVector labels = read_labels(labels_path);
  const Matrix pool = read_matrix(emb_path);
  SelectionConfig sc = selection_config(cfg);
  const Smoothing sm = as_config_error("prior_smoothing", [&] { return parse_smoothing(cfg.get("prior_smoothing")); });

  std::optional<Matrix> queries;
  if (!io.queries.empty()) {
    record_input(m, "queries", need(io.queries));
    const PreprocessModel model = PreprocessModel::load(io.out_dir / "preprocess");
    queries = model.apply(read_matrix(io.queries));
  }
  const Index runs = positive(cfg, "n_runs");
  const bool per_query = sc.base == BaseSelector::SubsetUtility;
  std::vector<TaggedSelection> all;
  const std::uint64_t seed0 = sc.seed;
  for (Index r = 0; r < runs; ++r) {
    sc.seed = seed0 + static_cast<std::uint64_t>(r);
    const auto results = run_selection(pool, labels, queries ? &*queries : nullptr, sc, sm, cfg.real("prior_epsilon"));
    for (std::size_t q = 0; q < results.size(); ++q) {
      TaggedSelection t;
      t.tags = per_query ? std::vector<Index>{r, static_cast<Index>(q)} : std::vector<Index>{r};
      t.result = results[q];
      all.push_back(std::move(t));
    }
  }
  const fs::path out = io.out_dir / "selection.csv";
  write_file(out, selection_csv(all, per_query ? std::vector<std::string>{"run", "query"}
                                               : std::vector<std::string>{"run"}));
  record_output(m, "selection", out);
  m.write(io.out_dir / "select.manifest");
}

void stage_analyze(const Config& cfg, const PipelineIO& io) {
  RunManifest m = stage_manifest(cfg, "analyze");
  const fs::path labels_path = need(io.out_dir / "labels.txt");
  const fs::path sel_path = need(io.out_dir / "selection.csv");
  record_input(m, "labels", labels_path, labels_path.filename().string());
  record_input(m, "selection", sel_path, sel_path.filename().string());
  const LabelVector labels = read_labels(labels_path);
  const auto selections = read_selection_csv(sel_path);
  const fs::path out = io.out_dir / "analysis.txt";
  write_file(out, exposure_table(exposure_metrics(labels, selections), cluster_stats(labels)));
  record_output(m, "analysis", out);
  m.write(io.out_dir / "analyze.manifest");
}

}  // namespace

Stage parse_stage(const std::string& name) {
  for (std::size_t i = 0; i < kStageNames.size(); ++i)
    if (kStageNames[i] == name) return static_cast<Stage>(i);
  throw Error(ErrorKind::ConfigError, "unknown stage '" + name + "'");
}

std::string to_string(Stage s) { return kStageNames[static_cast<std::size_t>(s)]; }

void run_pipeline(const Config& cfg, const PipelineIO& io, Stage first, Stage last) {
  if (first > last) throw Error(ErrorKind::ConfigError, "stage range is empty");
  fs::create_directories(io.out_dir);
  RunManifest run = stage_manifest(cfg, to_string(first) + ".." + to_string(last));
  std::string stages;
  for (int s = static_cast<int>(first); s <= static_cast<int>(last); ++s) {
    const auto stage = static_cast<Stage>(s);
    switch (stage) {
      case Stage::Preprocess: stage_preprocess(cfg, io); break;
      case Stage::Dictionary: stage_dictionary(cfg, io); break;
      case Stage::Cluster: stage_cluster(cfg, io); break;
      case Stage::Prior: stage_prior(cfg, io); break;
      case Stage::Select: stage_select(cfg, io); break;
      case Stage::Analyze: stage_analyze(cfg, io); break;
    }
    if (!stages.empty()) stages += ",";
    stages += to_string(stage);
    run.set("manifest." + to_string(stage) + ".hash", content_hash(io.out_dir / (to_string(stage) + ".manifest")));
  }
  run.set("stages", stages);
  run.write(io.out_dir / "run.manifest");
}

}  // namespace ucs
