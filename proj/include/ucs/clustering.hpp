#ifndef UCS_CLUSTERING_HPP
#define UCS_CLUSTERING_HPP

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ucs/types.hpp"

namespace ucs {

enum class ClusterMethod { DictDbscan, Dbscan, DictArgmax };

ClusterMethod parse_cluster_method(const std::string& name);
std::string to_string(ClusterMethod m);

struct DbscanParams {
  Index k = 20;
  double q = 0.01;
  Index min_samples = 1;
  std::optional<double> eps_override;
};

struct ClusterAssignment {
  LabelVector labels;      // post-remap, every entry >= 1
  LabelVector raw_labels;  // -1 marks noise; argmax stores the atom index
  ClusterMethod method = ClusterMethod::DictDbscan;
  double eps = 0.0;

  Index cluster_count() const;
};

/// Rows scaled to unit norm; zero rows stay zero.
Matrix unit_rows(const Matrix& x);

/// Cosine distances between rows, blocked on a fixed 256-row grid.
///
/// d(i, j) is bitwise symmetric. Zero rows sit at distance 1 from every
/// other row; the diagonal is 0.
Matrix cosine_distance_matrix(const Matrix& x);

/// Visits the distance matrix one row block at a time:
/// body(first_row, block) with block holding rows [first_row, first_row + block.rows()).
void for_each_distance_block(const Matrix& unit, const std::function<void(Index, const Matrix&)>& body);

/// Linear interpolation between order statistics, h = (n - 1) q.
double quantile_linear(std::vector<double> values, double q);

/// k-th smallest distance from each row to the other rows.
std::vector<double> knn_distances(const Matrix& x, Index k);

/// Quantile_q of the k-th nearest neighbour distances.
double knn_quantile_eps(const Matrix& x, Index k, double q);

/// Rows within eps of each row, including the row itself, ascending.
std::vector<std::vector<Index>> eps_neighborhoods(const Matrix& x, double eps);

/// DBSCAN on cosine distance. Core points have at least min_samples
/// neighbours (self included). Clusters grow from cores in index order; a
/// border point joins the first cluster that reaches it. Clusters are then
/// numbered 0, 1, ... by smallest member index and noise is -1.
LabelVector dbscan(const Matrix& x, double eps, Index min_samples);
LabelVector dbscan_from_neighborhoods(const std::vector<std::vector<Index>>& neighborhoods, Index min_samples);

/// Non-noise clusters become 1..C in order of first appearance; each noise
/// row then gets a fresh ID C+1, C+2, ... in row order.
ClusterAssignment remap_noise_to_singletons(const LabelVector& raw);

/// c_i = argmax_j |r_ij|, lowest atom on ties; IDs renumbered by first appearance.
ClusterAssignment argmax_atoms(const Matrix& codes);

/// eps heuristic (or override), DBSCAN, then singleton remap.
ClusterAssignment cluster_dbscan(const Matrix& x, const DbscanParams& params, ClusterMethod tag);

/// Renumbers labels to 1.. by first appearance; equal partitions map to equal vectors.
LabelVector canonical_partition(const LabelVector& labels);

}  // namespace ucs

#endif  // UCS_CLUSTERING_HPP
