#ifndef UCS_PIPELINE_HPP
#define UCS_PIPELINE_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ucs/clustering.hpp"
#include "ucs/coverage.hpp"
#include "ucs/error.hpp"
#include "ucs/latent_dictionary.hpp"
#include "ucs/matrix_store.hpp"
#include "ucs/preprocess.hpp"
#include "ucs/selection.hpp"
#include "ucs/synth_oracle.hpp"

namespace ucs {

/// 0 ok, 2 config, 3 missing or malformed input, 4 numeric failure.
int exit_code(ErrorKind kind);

struct ConfigKey {
  std::string name;
  std::string fallback;  // empty means "unset"
  std::string help;
};

/// Flat key=value run configuration. Lines starting with '#' are comments.
class Config {
 public:
  static const std::vector<ConfigKey>& keys();
  static const ConfigKey& key(const std::string& name);

  /// Throws ConfigError on unknown keys or malformed lines.
  static Config parse(const std::string& text);
  static Config load(const std::filesystem::path& path);

  void set(const std::string& name, const std::string& value);
  bool has(const std::string& name) const;
  std::string get(const std::string& name) const;
  double real(const std::string& name) const;
  Index integer(const std::string& name) const;
  bool flag(const std::string& name) const;
  std::optional<double> optional_real(const std::string& name) const;
  std::optional<Index> optional_integer(const std::string& name) const;

  /// Every key with its effective value, sorted by name.
  std::map<std::string, std::string> effective() const;
  std::string to_string() const;

 private:
  std::map<std::string, std::string> values_;
};

PreprocessOptions preprocess_options(const Config& cfg);
DictionaryOptions dictionary_options(const Config& cfg);
DbscanParams dbscan_params(const Config& cfg);
ClusterMethod cluster_method(const Config& cfg);
SgtConfig sgt_config(const Config& cfg);
SelectionConfig selection_config(const Config& cfg);

/// Manifest seeded with the effective config, seed and timestamp.
/// The timestamp comes from SOURCE_DATE_EPOCH when set.
RunManifest stage_manifest(const Config& cfg, const std::string& stage);
/// `shown` replaces the path in the manifest (for artifacts inside the output directory).
void record_input(RunManifest& manifest, const std::string& name, const std::filesystem::path& path,
                  const std::string& shown = "");
void record_output(RunManifest& manifest, const std::string& name, const std::filesystem::path& path);

// --- Stage helpers shared by the CLI subcommands and run_pipeline ------------

/// Subset file: one row index per line, or all rows when the path is empty.
IndexSet read_subset(const std::filesystem::path& path, Index rows);

std::string spectrum_table(const SubsetSpectrum& s);
std::string estimate_table(const SubsetSpectrum& s, const SgtConfig& cfg);
std::string prior_csv(const CorpusPrior& prior);

struct TaggedSelection {
  std::vector<Index> tags;  // one value per tag column
  SelectionResult result;
};

/// Columns step,index,base_gain,coverage_term,total, preceded by one column
/// per tag name (for example run or query).
std::string selection_csv(const std::vector<TaggedSelection>& selections, const std::vector<std::string>& tag_names);
/// One index set per distinct tag tuple, in file order.
std::vector<IndexSet> read_selection_csv(const std::filesystem::path& path);

/// VoteK, DPP or subset utility on an embedding pool. Subset utility needs
/// queries and returns one selection per query row; the others return one.
std::vector<SelectionResult> run_selection(const Matrix& pool, const LabelVector& labels, const Matrix* queries,
                                           const SelectionConfig& cfg, Smoothing prior_smoothing = Smoothing::PowerLaw,
                                           double prior_epsilon = 1e-6);

std::string exposure_table(const ExposureReport& rep, const ClusterStats& stats);
std::string oracle_csv(const std::vector<std::pair<double, OracleReport>>& rows);

enum class Stage { Preprocess = 0, Dictionary, Cluster, Prior, Select, Analyze };

Stage parse_stage(const std::string& name);
std::string to_string(Stage s);

struct PipelineIO {
  std::filesystem::path input;    // embedding matrix or token-bundle directory
  std::filesystem::path queries;  // optional query embeddings (subset_utility)
  std::filesystem::path out_dir;
};

/// Runs stages first..last, each reading the previous stage's artifacts from
/// out_dir. Writes <stage>.manifest per stage and run.manifest listing them.
void run_pipeline(const Config& cfg, const PipelineIO& io, Stage first, Stage last);

}  // namespace ucs

#endif  // UCS_PIPELINE_HPP
