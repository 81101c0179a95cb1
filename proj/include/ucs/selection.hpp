#ifndef UCS_SELECTION_HPP
#define UCS_SELECTION_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ucs/coverage.hpp"
#include "ucs/types.hpp"

namespace ucs {

enum class BaseSelector { Dpp, Votek, SubsetUtility };

BaseSelector parse_base_selector(const std::string& name);
std::string to_string(BaseSelector b);

struct SelectionConfig {
  Index budget = 10;
  double lambda = 0.0;
  BaseSelector base = BaseSelector::Votek;
  double dpp_scale_factor = 0.1;
  Index votek_k = 3;
  double votek_discount_base = 10.0;
  Index candidate_num = 50;
  SgtConfig sgt;
  std::uint64_t seed = 0;
  bool frozen_votes = false;  // compute VoteK votes once with an empty selection
};

struct SelectionStep {
  Index index = 0;
  double base_gain = 0.0;
  double coverage_term = 0.0;
  double total = 0.0;
};

struct SelectionResult {
  std::vector<Index> indices;
  std::vector<SelectionStep> steps;
  double phi = 0.0;
  Index k_seen = 0;
};

// --- DPP -------------------------------------------------------------------

/// L = exp(scale * cos(x_i, x_j)), symmetrized, plus 1e-8 on the diagonal.
Matrix dpp_kernel(const Matrix& x, double scale);

/// Incremental Cholesky state for greedy log-det maximization.
///
/// gain(i) = log det L_{S+i} - log det L_S = log d_i^2, where d_i^2 is the
/// Schur complement of item i given the current selection.
class GreedyLogDet {
 public:
  explicit GreedyLogDet(const Matrix& kernel);

  /// -inf for selected items and non-positive Schur complements.
  double gain(Index i) const;
  std::vector<double> gains() const;
  void add(Index i);
  bool selected(Index i) const { return chosen_[static_cast<std::size_t>(i)] != 0; }
  Index size() const { return static_cast<Index>(order_.size()); }

 private:
  const Matrix& kernel_;
  Matrix factors_;  // N x budget, grown column by column
  Vector residual_;
  std::vector<char> chosen_;
  std::vector<Index> order_;
};

/// Plain greedy log-det MAP; ties go to the lowest index.
SelectionResult greedy_dpp(const Matrix& kernel, Index budget);

/// Greedy log-det plus lambda * (Phi(S + i) - Phi(S)).
SelectionResult greedy_dpp_ucs(const Matrix& kernel, const LabelVector& labels, const SelectionConfig& cfg);

// --- Coverage bookkeeping ------------------------------------------------------

/// Running spectrum of a growing subset with O(M) what-if evaluation.
class IncrementalCoverage {
 public:
  IncrementalCoverage(const LabelVector& labels, const SgtConfig& cfg);

  double phi() const { return phi_; }
  Index k_seen() const { return static_cast<Index>(counts_.size()); }
  /// Phi(S + i) without changing state.
  double phi_with(Index i) const;
  void add(Index i);

 private:
  double evaluate(const Spectrum& f, Index size, Index k_seen) const;

  const LabelVector& labels_;
  SgtConfig cfg_;
  std::unordered_map<Label, Index> counts_;
  Spectrum f_;
  Index size_ = 0;
  double phi_ = 0.0;
};

// --- VoteK -----------------------------------------------------------------

/// k nearest rows by cosine distance for every row, self excluded, ties to
/// the lower index.
std::vector<std::vector<Index>> knn_graph(const Matrix& x, Index k);

/// v(i) = sum over voters j with i in kNN(j) of base^(-o(j)), o(j) counting
/// selected rows among kNN(j).
std::vector<double> votek_votes(const std::vector<std::vector<Index>>& graph, std::span<const Index> selected,
                                double discount_base);
std::vector<double> votek_votes(const Matrix& x, Index k, std::span<const Index> selected, double discount_base);

SelectionResult votek_select(const Matrix& x, const SelectionConfig& cfg);
SelectionResult votek_select(const std::vector<std::vector<Index>>& graph, const SelectionConfig& cfg);

/// score(i) = v(i) + lambda log w_{c(i)}, recomputing votes after each pick.
SelectionResult votek_ucs_select(const Matrix& x, const LabelVector& labels, const CorpusPrior& prior,
                                 const SelectionConfig& cfg);
SelectionResult votek_ucs_select(const std::vector<std::vector<Index>>& graph, const LabelVector& labels,
                                 const CorpusPrior& prior, const SelectionConfig& cfg);

enum class RarityVariant { B1, B2 };

/// Rarity-only VoteK controls without Good-Turing adjustment.
/// B1: v(i) + lambda / n_{c(i)}.
/// B2: v(i) + lambda log(C / (g_hat_{n_{c(i)}} + eps)), C the number of clusters.
SelectionResult rarity_controls(const std::vector<std::vector<Index>>& graph, const LabelVector& labels,
                                const CorpusPrior& prior, const SelectionConfig& cfg, RarityVariant variant);
SelectionResult rarity_controls(const Matrix& x, const LabelVector& labels, const CorpusPrior& prior,
                                const SelectionConfig& cfg, RarityVariant variant);

// --- Candidate subsets -----------------------------------------------------------

/// argmax_c utility_c + lambda Phi(S_c); first candidate wins ties.
/// Throws EmptyCandidateList.
SelectionResult subset_utility_ucs(std::span<const IndexSet> candidates, std::span<const double> utilities,
                                   const LabelVector& labels, const SelectionConfig& cfg);

/// Plain argmax of the utilities.
SelectionResult subset_utility_select(std::span<const IndexSet> candidates, std::span<const double> utilities);

/// candidate_num subsets of size `budget` drawn from the query's
/// candidate_num most similar pool rows. The first subset is the top-B
/// block; members of each subset are listed by decreasing similarity.
std::vector<IndexSet> propose_candidates(const Matrix& pool, const Vector& query, Index budget, Index candidate_num,
                                         std::uint64_t seed);

/// Offline stand-in for a model-scored subset objective: mean cosine
/// relevance to the query minus mean pairwise cosine similarity in the subset.
double synthetic_utility(const Matrix& pool, const Vector& query, std::span<const Index> subset);

/// Indices of the `count` pool rows most similar to the query, best first.
std::vector<Index> top_similar(const Matrix& pool, const Vector& query, Index count);

}  // namespace ucs

#endif  // UCS_SELECTION_HPP
