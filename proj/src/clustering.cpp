#include "ucs/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "ucs/error.hpp"
#include "ucs/parallel.hpp"

namespace ucs {
namespace {

constexpr Index kTile = 256;

// Distances between row tiles a and b. The product is always formed with the
// lower tile index on the left so (a, b) and (b, a) share one computation.
Matrix distance_tile(const Matrix& unit, Index a, Index b) {
  const Index n = unit.rows();
  const Index lo = std::min(a, b);
  const Index hi = std::max(a, b);
  const Index lo_begin = lo * kTile;
  const Index hi_begin = hi * kTile;
  const Index lo_len = std::min(n, lo_begin + kTile) - lo_begin;
  const Index hi_len = std::min(n, hi_begin + kTile) - hi_begin;
  Matrix sim(lo_len, hi_len);
  sim.noalias() = unit.middleRows(lo_begin, lo_len) * unit.middleRows(hi_begin, hi_len).transpose();
  Matrix dist = (1.0 - sim.array()).cwiseMax(0.0).cwiseMin(2.0).matrix();
  if (a == b) {
    for (Index i = 0; i < lo_len; ++i) {
      dist(i, i) = 0.0;
      for (Index j = i + 1; j < lo_len; ++j) dist(j, i) = dist(i, j);
    }
    return dist;
  }
  if (a > b) return dist.transpose();
  return dist;
}

}  // namespace

ClusterMethod parse_cluster_method(const std::string& name) {
  if (name == "dict_dbscan") return ClusterMethod::DictDbscan;
  if (name == "dbscan") return ClusterMethod::Dbscan;
  if (name == "dict_argmax") return ClusterMethod::DictArgmax;
  throw Error(ErrorKind::ConfigError, "unknown clustering method '" + name + "' (dict_dbscan|dbscan|dict_argmax)");
}

std::string to_string(ClusterMethod m) {
  switch (m) {
    case ClusterMethod::DictDbscan: return "dict_dbscan";
    case ClusterMethod::Dbscan: return "dbscan";
    case ClusterMethod::DictArgmax: return "dict_argmax";
  }
  return "dict_dbscan";
}

Index ClusterAssignment::cluster_count() const {
  Label top = 0;
  for (Label l : labels) top = std::max(top, l);
  return static_cast<Index>(top);
}

Matrix unit_rows(const Matrix& x) {
  Matrix u = x;
  for (Index i = 0; i < u.rows(); ++i) {
    const double norm = u.row(i).norm();
    if (norm > 0.0) u.row(i) /= norm;
  }
  return u;
}

void for_each_distance_block(const Matrix& unit, const std::function<void(Index, const Matrix&)>& body) {
  const Index n = unit.rows();
  const Index tiles = (n + kTile - 1) / kTile;
  parallel_for(
      n,
      [&](std::int64_t begin, std::int64_t end) {
        const Index a = begin / kTile;
        Matrix block(end - begin, n);
        for (Index b = 0; b < tiles; ++b) {
          const Index col = b * kTile;
          const Index len = std::min(n, col + kTile) - col;
          block.middleCols(col, len) = distance_tile(unit, a, b);
        }
        body(begin, block);
      },
      kTile);
}

Matrix cosine_distance_matrix(const Matrix& x) {
  const Matrix unit = unit_rows(x);
  Matrix out(x.rows(), x.rows());
  for_each_distance_block(unit, [&](Index first, const Matrix& block) { out.middleRows(first, block.rows()) = block; });
  return out;
}

double quantile_linear(std::vector<double> values, double q) {
  if (values.empty()) throw Error(ErrorKind::TooFewPoints, "quantile of an empty set");
  if (!(q >= 0.0 && q <= 1.0)) throw Error(ErrorKind::InvalidArgument, "quantile must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = static_cast<double>(values.size() - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<double> knn_distances(const Matrix& x, Index k) {
  const Index n = x.rows();
  if (n < 2 || k < 1 || k >= n)
    throw Error(ErrorKind::TooFewPoints, "kNN needs 1 <= k < N (k=" + std::to_string(k) + ", N=" + std::to_string(n) + ")");
  const Matrix unit = unit_rows(x);
  std::vector<double> kth(static_cast<std::size_t>(n));
  for_each_distance_block(unit, [&](Index first, const Matrix& block) {
    std::vector<double> others(static_cast<std::size_t>(n - 1));
    for (Index r = 0; r < block.rows(); ++r) {
      const Index i = first + r;
      std::size_t w = 0;
      for (Index j = 0; j < n; ++j)
        if (j != i) others[w++] = block(r, j);
      std::nth_element(others.begin(), others.begin() + (k - 1), others.end());
      kth[static_cast<std::size_t>(i)] = others[static_cast<std::size_t>(k - 1)];
    }
  });
  return kth;
}

double knn_quantile_eps(const Matrix& x, Index k, double q) { return quantile_linear(knn_distances(x, k), q); }

std::vector<std::vector<Index>> eps_neighborhoods(const Matrix& x, double eps) {
  if (!(eps >= 0.0)) throw Error(ErrorKind::InvalidArgument, "eps must be non-negative");
  const Matrix unit = unit_rows(x);
  std::vector<std::vector<Index>> nbrs(static_cast<std::size_t>(x.rows()));
  for_each_distance_block(unit, [&](Index first, const Matrix& block) {
    for (Index r = 0; r < block.rows(); ++r) {
      auto& list = nbrs[static_cast<std::size_t>(first + r)];
      for (Index j = 0; j < block.cols(); ++j)
        if (block(r, j) <= eps) list.push_back(j);
    }
  });
  return nbrs;
}

LabelVector dbscan_from_neighborhoods(const std::vector<std::vector<Index>>& nbrs, Index min_samples) {
  if (min_samples < 1) throw Error(ErrorKind::InvalidArgument, "min_samples must be >= 1");
  const auto n = nbrs.size();
  std::vector<char> core(n);
  for (std::size_t i = 0; i < n; ++i) core[i] = static_cast<Index>(nbrs[i].size()) >= min_samples;

  constexpr Label kUnset = std::numeric_limits<Label>::min();
  LabelVector raw(n, kUnset);
  Label next = 0;
  std::vector<Index> frontier;
  for (std::size_t seed = 0; seed < n; ++seed) {
    if (!core[seed] || raw[seed] != kUnset) continue;
    const Label id = next++;
    raw[seed] = id;
    frontier.assign(1, static_cast<Index>(seed));
    while (!frontier.empty()) {
      const auto p = static_cast<std::size_t>(frontier.back());
      frontier.pop_back();
      for (Index q : nbrs[p]) {
        auto& lq = raw[static_cast<std::size_t>(q)];
        if (lq != kUnset) continue;
        lq = id;
        if (core[static_cast<std::size_t>(q)]) frontier.push_back(q);
      }
    }
  }
  for (auto& l : raw)
    if (l == kUnset) l = kNoise;

  // Renumber clusters by smallest member index.
  std::unordered_map<Label, Label> order;
  for (auto& l : raw) {
    if (l == kNoise) continue;
    const auto [it, fresh] = order.try_emplace(l, static_cast<Label>(order.size()));
    l = it->second;
  }
  return raw;
}

LabelVector dbscan(const Matrix& x, double eps, Index min_samples) {
  return dbscan_from_neighborhoods(eps_neighborhoods(x, eps), min_samples);
}

ClusterAssignment remap_noise_to_singletons(const LabelVector& raw) {
  ClusterAssignment out;
  out.raw_labels = raw;
  out.labels.resize(raw.size());
  std::unordered_map<Label, Label> ids;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] == kNoise) continue;
    if (raw[i] < 0) throw Error(ErrorKind::InvalidArgument, "raw labels must be >= -1");
    const auto [it, fresh] = ids.try_emplace(raw[i], static_cast<Label>(ids.size() + 1));
    out.labels[i] = it->second;
  }
  Label next = static_cast<Label>(ids.size());
  for (std::size_t i = 0; i < raw.size(); ++i)
    if (raw[i] == kNoise) out.labels[i] = ++next;
  return out;
}

ClusterAssignment argmax_atoms(const Matrix& codes) {
  if (codes.cols() < 1) throw Error(ErrorKind::InvalidArgument, "codes need at least one atom");
  LabelVector raw(static_cast<std::size_t>(codes.rows()));
  for (Index i = 0; i < codes.rows(); ++i) {
    Index best = 0;
    double best_mag = std::abs(codes(i, 0));
    for (Index j = 1; j < codes.cols(); ++j) {
      const double mag = std::abs(codes(i, j));
      if (mag > best_mag) {
        best = j;
        best_mag = mag;
      }
    }
    raw[static_cast<std::size_t>(i)] = best;
  }
  ClusterAssignment out = remap_noise_to_singletons(raw);
  out.method = ClusterMethod::DictArgmax;
  return out;
}

ClusterAssignment cluster_dbscan(const Matrix& x, const DbscanParams& params, ClusterMethod tag) {
  const double eps = params.eps_override ? *params.eps_override : knn_quantile_eps(x, params.k, params.q);
  ClusterAssignment out = remap_noise_to_singletons(dbscan(x, eps, params.min_samples));
  out.method = tag;
  out.eps = eps;
  return out;
}

LabelVector canonical_partition(const LabelVector& labels) {
  LabelVector out(labels.size());
  std::unordered_map<Label, Label> ids;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto [it, fresh] = ids.try_emplace(labels[i], static_cast<Label>(ids.size() + 1));
    out[i] = it->second;
  }
  return out;
}

}  // namespace ucs
