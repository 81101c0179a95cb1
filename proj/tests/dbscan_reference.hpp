#ifndef UCS_TEST_DBSCAN_REFERENCE_HPP
#define UCS_TEST_DBSCAN_REFERENCE_HPP

#include <map>
#include <numeric>
#include <vector>

#include "ucs/types.hpp"

namespace test {

struct UnionFind {
  std::vector<ucs::Index> parent;
  explicit UnionFind(ucs::Index n) : parent(static_cast<std::size_t>(n)) {
    std::iota(parent.begin(), parent.end(), ucs::Index{0});
  }
  ucs::Index find(ucs::Index x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  }
  void unite(ucs::Index a, ucs::Index b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
  }
};

/// DBSCAN written from the definition: cores are points with at least
/// min_samples points (self included) within eps; cores within eps of each
/// other share a cluster; a border point joins the adjacent core cluster
/// whose smallest core index is lowest; the rest is noise (-1). Labels are
/// the smallest core index of each cluster.
inline ucs::LabelVector reference_dbscan(const ucs::Matrix& dist, double eps, ucs::Index min_samples) {
  const ucs::Index n = dist.rows();
  std::vector<char> core(static_cast<std::size_t>(n), 0);
  for (ucs::Index i = 0; i < n; ++i) {
    ucs::Index count = 0;
    for (ucs::Index j = 0; j < n; ++j) count += dist(i, j) <= eps;
    core[static_cast<std::size_t>(i)] = count >= min_samples;
  }
  UnionFind uf(n);
  for (ucs::Index i = 0; i < n; ++i)
    for (ucs::Index j = i + 1; j < n; ++j)
      if (core[static_cast<std::size_t>(i)] && core[static_cast<std::size_t>(j)] && dist(i, j) <= eps) uf.unite(i, j);
  ucs::LabelVector out(static_cast<std::size_t>(n), -1);
  for (ucs::Index i = 0; i < n; ++i) {
    if (core[static_cast<std::size_t>(i)]) {
      out[static_cast<std::size_t>(i)] = uf.find(i);
      continue;
    }
    ucs::Index best = -1;
    for (ucs::Index j = 0; j < n; ++j) {
      if (!core[static_cast<std::size_t>(j)] || dist(i, j) > eps) continue;
      const ucs::Index root = uf.find(j);
      if (best < 0 || root < best) best = root;
    }
    out[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

/// Union-find connected components of the eps-graph, labelled by smallest member.
inline ucs::LabelVector eps_components(const ucs::Matrix& dist, double eps) {
  const ucs::Index n = dist.rows();
  UnionFind uf(n);
  for (ucs::Index i = 0; i < n; ++i)
    for (ucs::Index j = i + 1; j < n; ++j)
      if (dist(i, j) <= eps) uf.unite(i, j);
  ucs::LabelVector out(static_cast<std::size_t>(n));
  for (ucs::Index i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = uf.find(i);
  return out;
}

/// Clustered pool: `clusters` tight blobs around random directions plus
/// uniform background noise.
inline ucs::Matrix blob_pool(ucs::Index n, ucs::Index dim, ucs::Index clusters, double spread, std::uint64_t seed);

}  // namespace test

#include "test_util.hpp"

inline ucs::Matrix test::blob_pool(ucs::Index n, ucs::Index dim, ucs::Index clusters, double spread,
                                   std::uint64_t seed) {
  ucs::Rng rng(seed);
  const ucs::Matrix centres = random_matrix(clusters, dim, seed ^ 0xabcdefULL);
  ucs::Matrix x(n, dim);
  for (ucs::Index i = 0; i < n; ++i) {
    if (rng.uniform() < 0.2) {
      for (ucs::Index j = 0; j < dim; ++j) x(i, j) = rng.normal();
    } else {
      const auto c = static_cast<ucs::Index>(rng.below(static_cast<std::uint64_t>(clusters)));
      for (ucs::Index j = 0; j < dim; ++j) x(i, j) = centres(c, j) + spread * rng.normal();
    }
  }
  return x;
}

#endif
