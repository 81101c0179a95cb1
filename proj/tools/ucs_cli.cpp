#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ucs/parallel.hpp"
#include "ucs/pipeline.hpp"

namespace fs = std::filesystem;
using namespace ucs;

namespace {

struct Common {
  std::string config_file;
  std::vector<std::string> sets;
  std::map<std::string, std::string> overrides;
};

const std::map<std::string, std::string> kAliases = {
    {"sgt_lambda", "--lambda"},
    {"clustering_method", "--method"},
};

void add_keys(CLI::App* sub, Common& common, const std::vector<std::string>& names) {
  sub->add_option("--config", common.config_file, "key=value config file");
  sub->add_option("--set", common.sets, "override a config key (key=value), repeatable");
  std::string footer = "Config keys:\n";
  for (const auto& name : names) {
    const ConfigKey& k = Config::key(name);
    std::string flags = "--" + name;
    if (auto it = kAliases.find(name); it != kAliases.end()) flags += "," + it->second;
    sub->add_option_function<std::string>(
        flags, [&common, name](const std::string& v) { common.overrides[name] = v; }, k.help);
    footer += "  " + name + " (default " + (k.fallback.empty() ? "unset" : k.fallback) + "): " + k.help + "\n";
  }
  sub->footer(footer);
}

Config build_config(const Common& common) {
  Config cfg = common.config_file.empty() ? Config() : Config::load(common.config_file);
  for (const auto& s : common.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::ConfigError, "--set expects key=value, got '" + s + "'");
    cfg.set(s.substr(0, eq), s.substr(eq + 1));
  }
  for (const auto& [k, v] : common.overrides) cfg.set(k, v);
  return cfg;
}

fs::path manifest_path(const fs::path& output) { return fs::path(output.string() + ".manifest"); }

void emit(const std::string& text, const std::string& output) {
  if (output.empty())
    std::cout << text;
  else
    write_file(output, text);
}

const std::vector<std::string> kSgtKeys = {"sgt_t", "sgt_bin_size", "sgt_offset", "sgt_smoothing", "sgt_k0"};
const std::vector<std::string> kDictKeys = {"dict_n_components", "dict_alpha", "dict_max_iter", "dict_tolerance",
                                            "seed"};

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unseen coverage selection toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (default: UCS_THREADS or all cores)");

  Common common;
  std::function<void()> action;

  // ingest
  std::string in_path, out_path, dtype = "f64";
  auto* ingest = app.add_subcommand("ingest", "Pool token bundles or convert a matrix into a UCSM file");
  ingest->add_option("--input", in_path, "bundle directory, UCSM or CSV matrix")->required();
  ingest->add_option("--output", out_path, "UCSM output")->required();
  ingest->add_option("--dtype", dtype, "f32 or f64")->check(CLI::IsMember({"f32", "f64"}));
  add_keys(ingest, common, {"pooling"});
  ingest->callback([&] {
    action = [&] {
      const Config cfg = build_config(common);
      RunManifest m = stage_manifest(cfg, "ingest");
      record_input(m, "input", in_path);
      Matrix e;
      if (fs::is_directory(in_path)) {
        e = pool_bundles(read_token_bundles(in_path), parse_pooling(cfg.get("pooling")));
      } else {
        e = read_matrix(in_path);
      }
      write_matrix(e, out_path, dtype == "f32" ? Dtype::F32 : Dtype::F64);
      record_output(m, "matrix", out_path);
      m.write(manifest_path(out_path));
    };
  });

  // preprocess
  std::string model_prefix, apply_model;
  auto* prep = app.add_subcommand("preprocess", "Standardize and project embeddings with PCA");
  prep->add_option("--input", in_path, "embeddings (UCSM, CSV or bundle directory)")->required();
  prep->add_option("--output", out_path, "projected embeddings (UCSM)")->required();
  prep->add_option("--model", model_prefix, "where to save the fitted model (default <output>.model)");
  prep->add_option("--apply", apply_model, "apply a saved model instead of fitting");
  add_keys(prep, common, {"standardize", "dict_pca_dim", "l2_normalize", "pooling"});
  prep->callback([&] {
    action = [&] {
      const Config cfg = build_config(common);
      RunManifest m = stage_manifest(cfg, "preprocess");
      record_input(m, "input", in_path);
      const Matrix e = fs::is_directory(in_path)
                           ? pool_bundles(read_token_bundles(in_path), parse_pooling(cfg.get("pooling")))
                           : read_matrix(in_path);
      PreprocessModel model;
      if (!apply_model.empty()) {
        model = PreprocessModel::load(apply_model);
        m.set("model", apply_model);
      } else {
        model = PreprocessModel::fit(e, preprocess_options(cfg));
        const std::string prefix = model_prefix.empty() ? out_path + ".model" : model_prefix;
        model.save(prefix);
        m.set("model", prefix);
      }
      write_matrix(model.apply(e), out_path);
      record_output(m, "embeddings", out_path);
      m.write(manifest_path(out_path));
    };
  });

  // dict-fit
  auto* dfit = app.add_subcommand("dict-fit", "Learn a ridge-coded dictionary");
  dfit->add_option("--input", in_path, "preprocessed embeddings")->required();
  dfit->add_option("--output", out_path, "codebook prefix (writes <prefix>.ucsm and <prefix>.meta)")->required();
  add_keys(dfit, common, kDictKeys);
  dfit->callback([&] {
    action = [&] {
      const Config cfg = build_config(common);
      RunManifest m = stage_manifest(cfg, "dict-fit");
      record_input(m, "input", in_path);
      const CodeBook book = fit_dictionary(read_matrix(in_path), dictionary_options(cfg));
      book.save(out_path);
      record_output(m, "atoms", out_path + ".ucsm");
      m.set("objective", format_real(book.objective));
      m.set("iterations", std::to_string(book.iterations));
      m.write(manifest_path(out_path));
    };
  });

  // dict-encode
  std::string dict_prefix;
  bool normalize = false;
  auto* denc = app.add_subcommand("dict-encode", "Ridge-encode embeddings against a codebook");
  denc->add_option("--dictionary", dict_prefix, "codebook prefix")->required();
  denc->add_option("--input", in_path, "preprocessed embeddings")->required();
  denc->add_option("--output", out_path, "codes (UCSM)")->required();
  denc->add_flag("--normalize", normalize, "l2-normalize each code row");
  denc->callback([&] {
    action = [&] {
      const Config cfg = build_config(common);
      RunManifest m = stage_manifest(cfg, "dict-encode");
      record_input(m, "input", in_path);
      record_input(m, "dictionary", dict_prefix + ".ucsm");
      const CodeBook book = CodeBook::load(dict_prefix);
      Matrix codes = ridge_encode(book, read_matrix(in_path));
      if (normalize) codes = normalize_codes(codes);
      write_matrix(codes, out_path);
      m.set("normalize", normalize ? "1" : "0");
      record_output(m, "codes", out_path);
      m.write(manifest_path(out_path));
    };
  });

  // joint-fit
  std::vector<std::string> sources;
  Index common_dim = 0;
  bool fix_maps = false;
  auto* jfit = app.add_subcommand("joint-fit", "Learn one dictionary shared by several aligned sources");
  jfit->add_option("--input", sources, "source embeddings, one per backbone")->required();
  jfit->add_option("--output", out_path, "output prefix")->required();
  jfit->add_option("--common-dim", common_dim, "shared dimension (default: smallest source width)");
  jfit->add_flag("--fix-maps", fix_maps, "keep the source maps at the identity embedding");
  add_keys(jfit, common, kDictKeys);
  jfit->callback([&] {
    action = [&] {
      const Config cfg = build_config(common);
      RunManifest m = stage_manifest(cfg, "joint-fit");
      std::vector<Matrix> mats;
      for (std::size_t i = 0; i < sources.size(); ++i) {
        record_input(m, "source" + std::to_string(i), sources[i]);
        mats.push_back(read_matrix(sources[i]));
      }
      JointOptions opts;
      opts.dictionary = dictionary_options(cfg);
      opts.common_dim = common_dim;
      opts.fix_maps = fix_maps;
      const JointCodeBook jb = fit_joint_dictionary(mats, opts);
      write_matrix(jb.atoms, out_path + ".ucsm");
      write_matrix(jb.codes, out_path + ".codes.ucsm");
      record_output(m, "atoms", out_path + ".ucsm");
      record_output(m, "codes", out_path + ".codes.ucsm");
      for (std::size_t i = 0; i < jb.maps.size(); ++i) {
        const std::string p = out_path + ".map" + std::to_string(i) + ".ucsm";
        write_matrix(jb.maps[i], p);
        record_output(m, "map" + std::to_string(i), p);
      }
      m.set("objective", format_real(jb.objective()));
      m.set("iterations", std::to_string(jb.iterations));
      m.write(manifest_path(out_path));
    };
  });

  // cluster
  std::string report_path;
  auto* clus = app.add_subcommand("cluster", "Assign latent cluster labels");
  clus->add_option("--input", in_path, "codes (dict_*) or embeddings (dbscan)")->required();
  clus->add_option("--output", out_path, "label file")->required();
  clus->add_option("--report", report_path, "eps/cluster report (default <output>.report)");
  add_keys(clus, common, {"clustering_method", "dbscan_k", "dbscan_q", "dbscan_min_samples", "dbscan_eps"});
  clus->callback([&] {
    action = [&] {
      const Config cfg = build_config(common);
      RunManifest m = stage_manifest(cfg, "cluster");
      record_input(m, "input", in_path);
      const ClusterMethod method = cluster_method(cfg);
      const Matrix x = read_matrix(in_path);
      const ClusterAssignment a =
          method == ClusterMethod::DictArgmax ? argmax_atoms(x) : cluster_dbscan(x, dbscan_params(cfg), method);
      write_labels(a.labels, out_path);
      const std::string rp = report_path.empty() ? out_path + ".report" : report_path;
      write_file(rp, "method=" + to_string(a.method) + "\neps=" + format_real(a.eps) +
                         "\nclusters=" + std::to_string(a.cluster_count()) + "\n");
      record_output(m, "labels", out_path);
      m.set("eps", format_real(a.eps));
      m.write(manifest_path(out_path));
    };
  });

  // spectrum / estimate
  std::string labels_path, subset_path;
  auto* spec = app.add_subcommand("spectrum", "Frequency-of-frequencies of a subset");
  spec->add_option("--labels", labels_path, "label file")->required();
  spec->add_option("--subset", subset_path, "row indices, one per line (default: all rows)");
  spec->add_option("--output", out_path, "write the table here instead of stdout");
  add_keys(spec, common, {});
  spec->callback([&] {
    action = [&] {
      const LabelVector labels = read_labels(labels_path);
      const IndexSet subset = read_subset(subset_path, static_cast<Index>(labels.size()));
      emit(spectrum_table(subset_spectrum(labels, subset)), out_path);
    };
  });

  auto* est = app.add_subcommand("estimate", "Unseen-cluster estimate and coverage of a subset");
  est->add_option("--labels", labels_path, "label file")->required();
  est->add_option("--subset", subset_path, "row indices, one per line (default: all rows)");
  est->add_option("--output", out_path, "write the table here instead of stdout");
  add_keys(est, common, kSgtKeys);
  est->callback([&] {
    action = [&] {
      const Config cfg = build_config(common);
      const LabelVector labels = read_labels(labels_path);
      const IndexSet subset = read_subset(subset_path, static_cast<Index>(labels.size()));
      emit(estimate_table(subset_spectrum(labels, subset), sgt_config(cfg)), out_path);
    };
  });

  // prior
  auto* pri = app.add_subcommand("prior", "Per-cluster rarity weights as CSV");
  pri->add_option("--labels", labels_path, "label file")->required();
  pri->add_option("--output", out_path, "CSV output (default stdout)");
  add_keys(pri, common, {"prior_smoothing", "prior_epsilon"});
  pri->callback([&] {
    action = [&] {
      const Config cfg = build_config(common);
      const CorpusPrior prior =
          corpus_prior(read_labels(labels_path), parse_smoothing(cfg.get("prior_smoothing")), cfg.real("prior_epsilon"));
      emit(prior_csv(prior), out_path);
    };
  });

  // select
  std::string emb_path, queries_path;
  auto* sel = app.add_subcommand("select", "Select demonstrations with optional coverage regularization");
  sel->add_option("--embeddings", emb_path, "pool embeddings")->required();
  sel->add_option("--labels", labels_path, "cluster labels of the pool")->required();
  sel->add_option("--queries", queries_path, "query embeddings (subset_utility)");
  sel->add_option("--output", out_path, "selection CSV")->required();
  add_keys(sel, common,
           concat({"base", "budget", "sgt_lambda", "votek_k", "votek_discount_base", "dpp_scale_factor",
                   "candidate_num", "seed", "n_runs", "prior_smoothing", "prior_epsilon"},
                  kSgtKeys));
  sel->callback([&] {
    action = [&] {
      const Config cfg = build_config(common);
      SelectionConfig sc = selection_config(cfg);
      RunManifest m = stage_manifest(cfg, "select");
      if (!fs::exists(labels_path)) throw Error(ErrorKind::MissingInput, labels_path + " not found");
      record_input(m, "embeddings", emb_path);
      record_input(m, "labels", labels_path);
      const Matrix pool = read_matrix(emb_path);
      const LabelVector labels = read_labels(labels_path);
      std::optional<Matrix> queries;
      if (!queries_path.empty()) {
        record_input(m, "queries", queries_path);
        queries = read_matrix(queries_path);
      }
      const Index runs = cfg.integer("n_runs");
      if (runs < 1) throw Error(ErrorKind::ConfigError, "n_runs must be >= 1");
      const bool per_query = sc.base == BaseSelector::SubsetUtility;
      std::vector<TaggedSelection> all;
      const std::uint64_t seed0 = sc.seed;
      for (Index r = 0; r < runs; ++r) {
        sc.seed = seed0 + static_cast<std::uint64_t>(r);
        const auto results = run_selection(pool, labels, queries ? &*queries : nullptr, sc,
                                           parse_smoothing(cfg.get("prior_smoothing")), cfg.real("prior_epsilon"));
        for (std::size_t q = 0; q < results.size(); ++q) {
          std::vector<Index> tags;
          if (runs > 1) tags.push_back(r);
          if (per_query) tags.push_back(static_cast<Index>(q));
          all.push_back({tags, results[q]});
        }
      }
      std::vector<std::string> names;
      if (runs > 1) names.push_back("run");
      if (per_query) names.push_back("query");
      write_file(out_path, selection_csv(all, names));
      record_output(m, "selection", out_path);
      m.write(manifest_path(out_path));
    };
  });

  // synth
  std::string population = "uniform", labels_out, embeddings_out;
  Index types = 100, n = 200, trials = 1000, pool_size = 0, dim = 16;
  double exponent = 1.1, spread = 0.05;
  std::vector<double> ts;
  bool without_replacement = false;
  auto* syn = app.add_subcommand("synth", "Monte Carlo unseen-type oracle and synthetic pools");
  syn->add_option("--population", population, "uniform or zipf")->check(CLI::IsMember({"uniform", "zipf"}));
  syn->add_option("--types", types, "number of types K");
  syn->add_option("--exponent", exponent, "zipf exponent");
  syn->add_option("--n", n, "sample size per trial (or pool size with --labels-out)");
  syn->add_option("--t", ts, "expansion factors (default: sgt_t)");
  syn->add_option("--trials", trials, "Monte Carlo trials");
  syn->add_flag("--without-replacement", without_replacement, "draw from a finite pool (sensitivity runs)");
  syn->add_option("--pool-size", pool_size, "finite pool size for --without-replacement");
  syn->add_option("--output", out_path, "oracle CSV (default stdout)");
  syn->add_option("--labels-out", labels_out, "write n sampled labels here instead of running the oracle");
  syn->add_option("--embeddings-out", embeddings_out, "Gaussian-mixture embeddings for --labels-out");
  syn->add_option("--dim", dim, "embedding dimension");
  syn->add_option("--spread", spread, "within-type standard deviation");
  add_keys(syn, common, {"seed", "sgt_t", "sgt_bin_size", "sgt_offset", "sgt_smoothing", "sgt_k0"});
  syn->callback([&] {
    action = [&] {
      const Config cfg = build_config(common);
      const auto seed = static_cast<std::uint64_t>(cfg.integer("seed"));
      const Population pop = population == "zipf" ? Population::zipf(types, exponent) : Population::uniform(types);
      if (!labels_out.empty()) {
        const LabelVector labels = sample_labels(pop, n, seed);
        write_labels(labels, labels_out);
        if (!embeddings_out.empty()) write_matrix(mixture_embeddings(labels, dim, spread, seed), embeddings_out);
        return;
      }
      SgtConfig sc = sgt_config(cfg);
      if (ts.empty()) ts.push_back(sc.t);
      std::vector<std::pair<double, OracleReport>> rows;
      for (double t : ts) {
        sc.t = t;
        rows.emplace_back(t, mc_unseen_oracle(pop, n, sc, trials, seed,
                                              without_replacement ? SamplingMode::WithoutReplacement
                                                                  : SamplingMode::WithReplacement,
                                              pool_size));
      }
      emit("# " + pop.description() + " n=" + std::to_string(n) + "\n" + oracle_csv(rows), out_path);
    };
  });

  // analyze
  std::string selection_path;
  auto* ana = app.add_subcommand("analyze", "Exposure metrics and cluster-size statistics");
  ana->add_option("--labels", labels_path, "label file")->required();
  ana->add_option("--selection", selection_path, "selection CSV (one selection per run/query)");
  ana->add_option("--output", out_path, "table output (default stdout)");
  add_keys(ana, common, {});
  ana->callback([&] {
    action = [&] {
      const LabelVector labels = read_labels(labels_path);
      const ClusterStats stats = cluster_stats(labels);
      if (selection_path.empty()) {
        std::string out = "cluster_size,mass\n";
        for (std::size_t k = 0; k < stats.mass.size(); ++k)
          out += std::to_string(k + 1) + "," + std::to_string(stats.mass[k]) + "\n";
        out += ">8," + std::to_string(stats.mass_over) + "\n";
        emit(out, out_path);
        return;
      }
      const auto selections = read_selection_csv(selection_path);
      emit(exposure_table(exposure_metrics(labels, selections), stats), out_path);
    };
  });

  // run
  std::string out_dir, from = "preprocess", to = "analyze";
  auto* run = app.add_subcommand("run", "Run pipeline stages end to end");
  run->add_option("--input", in_path, "pool embeddings or bundle directory");
  run->add_option("--queries", queries_path, "query embeddings (subset_utility)");
  run->add_option("--output-dir", out_dir, "artifact directory")->required();
  run->add_option("--from", from, "first stage: preprocess, dictionary, cluster, prior, select, analyze");
  run->add_option("--to", to, "last stage");
  std::vector<std::string> all_keys;
  for (const auto& k : Config::keys()) all_keys.push_back(k.name);
  add_keys(run, common, all_keys);
  run->callback([&] {
    action = [&] {
      const Config cfg = build_config(common);
      const Stage first = parse_stage(from), last = parse_stage(to);
      if (first == Stage::Preprocess && in_path.empty())
        throw Error(ErrorKind::MissingInput, "--input is required when starting at preprocess");
      run_pipeline(cfg, PipelineIO{in_path, queries_path, out_dir}, first, last);
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (threads > 0) set_num_threads(threads);
    if (action) action();
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
