#ifndef UCS_SYNTH_ORACLE_HPP
#define UCS_SYNTH_ORACLE_HPP

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ucs/coverage.hpp"
#include "ucs/types.hpp"

namespace ucs {

/// Discrete type distribution over types 1..K.
class Population {
 public:
  static Population uniform(Index k);
  /// p_i proportional to i^(-exponent).
  static Population zipf(Index k, double exponent);
  /// Probabilities are rescaled to sum to one; they must be non-negative
  /// and already sum to one within 1e-9.
  static Population from_probabilities(std::vector<double> p);

  Index types() const { return static_cast<Index>(prob_.size()); }
  const std::vector<double>& probabilities() const { return prob_; }
  std::string description() const { return description_; }

  /// Type for a uniform draw u in [0, 1).
  Label draw(double u) const;

 private:
  std::vector<double> prob_;
  std::vector<double> cdf_;
  std::string description_;
};

/// i.i.d. draws with replacement; labels are 1..K.
LabelVector sample_labels(const Population& pop, Index n, std::uint64_t seed);

/// One Gaussian blob per label: centre ~ N(0, I) seeded per label, points at
/// centre + spread * N(0, I).
Matrix mixture_embeddings(const LabelVector& labels, Index dim, double spread, std::uint64_t seed);

/// K (1 - 1/K)^n (1 - (1 - 1/K)^m): expected types first seen in the m draws
/// following n draws from a uniform population.
double expected_new_types_uniform(double k, double n, double m);

enum class SamplingMode { WithReplacement, WithoutReplacement };

struct OracleReport {
  double mean_new = 0.0;
  double std_new = 0.0;            // sample standard deviation across trials
  double mean_estimate = 0.0;      // clamped SGT
  double mean_abs_error = 0.0;     // |SGT - truth|
  double mean_gt_estimate = 0.0;   // clamped truncated GT
  double mean_abs_error_gt = 0.0;  // |clamped GT - truth|
  double mean_abs_error_gt_raw = 0.0;  // |unclamped GT - truth|
  Index trials = 0;
  Index extra_draws = 0;
};

/// Per trial (seeded with seed + trial): draw n labels, estimate the unseen
/// count for t*n further draws, draw floor(t*n) more and count the new types.
/// WithoutReplacement draws n + m from a finite pool of `pool_size` i.i.d.
/// labels and is meant for sensitivity runs only.
OracleReport mc_unseen_oracle(const Population& pop, Index n, const SgtConfig& cfg, Index trials, std::uint64_t seed,
                              SamplingMode mode = SamplingMode::WithReplacement, Index pool_size = 0);

struct ClusterStats {
  std::array<Index, 8> mass{};  // examples living in clusters of size 1..8
  Index mass_over = 0;          // examples in clusters larger than 8
  std::vector<Index> top_sizes; // up to eight largest cluster sizes, descending
  Index clusters = 0;
};

ClusterStats cluster_stats(const LabelVector& labels);

struct ExposureReport {
  double uniq_clusters = 0.0;
  double uniq_clusters_std = 0.0;
  double mean_cluster_size = 0.0;
  double mean_cluster_size_std = 0.0;
  double mean_inv_size = 0.0;
  double mean_inv_size_std = 0.0;
  Index selections = 0;
};

/// Exposure metrics over several selections; spreads are
/// population standard deviations across selections.
ExposureReport exposure_metrics(const LabelVector& labels, std::span<const IndexSet> selections);

}  // namespace ucs

#endif  // UCS_SYNTH_ORACLE_HPP
