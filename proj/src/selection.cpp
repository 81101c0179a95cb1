#include "ucs/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ucs/clustering.hpp"
#include "ucs/error.hpp"
#include "ucs/rng.hpp"

namespace ucs {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double cosine(const Vector& a, const Vector& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return a.dot(b) / (na * nb);
}

// Shared driver for every VoteK-style selector: bonus(i) is added with
// weight lambda to the (possibly frozen) vote count.
template <typename Bonus>
SelectionResult votek_driver(const std::vector<std::vector<Index>>& graph, const SelectionConfig& cfg,
                             double lambda, Bonus&& bonus) {
  const auto n = static_cast<Index>(graph.size());
  const Index budget = std::min(std::max<Index>(cfg.budget, 0), n);
  SelectionResult result;
  std::vector<char> taken(static_cast<std::size_t>(n), 0);
  std::vector<double> votes;
  if (cfg.frozen_votes) votes = votek_votes(graph, {}, cfg.votek_discount_base);
  for (Index step = 0; step < budget; ++step) {
    if (!cfg.frozen_votes) votes = votek_votes(graph, result.indices, cfg.votek_discount_base);
    Index best = -1;
    SelectionStep rec;
    for (Index i = 0; i < n; ++i) {
      if (taken[static_cast<std::size_t>(i)]) continue;
      const double term = bonus(i);
      const double total = votes[static_cast<std::size_t>(i)] + lambda * term;
      if (best < 0 || total > rec.total) {
        best = i;
        rec = {i, votes[static_cast<std::size_t>(i)], term, total};
      }
    }
    taken[static_cast<std::size_t>(best)] = 1;
    result.indices.push_back(best);
    result.steps.push_back(rec);
  }
  return result;
}

void check_labels(const LabelVector& labels, Index n) {
  if (static_cast<Index>(labels.size()) != n)
    throw Error(ErrorKind::DimensionOverflow, "label count " + std::to_string(labels.size()) +
                                                  " does not match pool size " + std::to_string(n));
}

void finish_coverage(SelectionResult& r, const LabelVector& labels, const SgtConfig& sgt) {
  const Coverage c = coverage_phi(labels, r.indices, sgt);
  r.phi = c.phi;
  r.k_seen = c.k_seen;
}

}  // namespace

BaseSelector parse_base_selector(const std::string& name) {
  if (name == "dpp") return BaseSelector::Dpp;
  if (name == "votek") return BaseSelector::Votek;
  if (name == "subset_utility" || name == "mdl") return BaseSelector::SubsetUtility;
  throw Error(ErrorKind::ConfigError, "unknown base selector '" + name + "' (dpp|votek|subset_utility)");
}

std::string to_string(BaseSelector b) {
  switch (b) {
    case BaseSelector::Dpp: return "dpp";
    case BaseSelector::Votek: return "votek";
    case BaseSelector::SubsetUtility: return "subset_utility";
  }
  return "votek";
}

Matrix dpp_kernel(const Matrix& x, double scale) {
  const Matrix unit = unit_rows(x);
  Matrix sim = unit * unit.transpose();
  Matrix l = (scale * sim.array()).exp().matrix();
  l = 0.5 * (l + l.transpose()).eval();
  l.diagonal().array() += 1e-8;
  return l;
}

GreedyLogDet::GreedyLogDet(const Matrix& kernel)
    : kernel_(kernel), residual_(kernel.diagonal()), chosen_(static_cast<std::size_t>(kernel.rows()), 0) {
  if (kernel.rows() != kernel.cols()) throw Error(ErrorKind::InvalidArgument, "kernel must be square");
}

double GreedyLogDet::gain(Index i) const {
  if (chosen_[static_cast<std::size_t>(i)]) return kNegInf;
  const double d2 = residual_(i);
  return d2 > 0.0 && std::isfinite(d2) ? std::log(d2) : kNegInf;
}

std::vector<double> GreedyLogDet::gains() const {
  std::vector<double> g(static_cast<std::size_t>(kernel_.rows()));
  for (Index i = 0; i < kernel_.rows(); ++i) g[static_cast<std::size_t>(i)] = gain(i);
  return g;
}

void GreedyLogDet::add(Index j) {
  const double d2 = residual_(j);
  if (!(d2 > 0.0)) throw Error(ErrorKind::SingularKernel, "non-positive Schur complement at item " + std::to_string(j));
  const double dj = std::sqrt(d2);
  const Index n = kernel_.rows();
  const Index m = static_cast<Index>(order_.size());
  factors_.conservativeResize(n, m + 1);
  for (Index i = 0; i < n; ++i) {
    double dot = 0.0;
    for (Index c = 0; c < m; ++c) dot += factors_(j, c) * factors_(i, c);
    const double e = (kernel_(j, i) - dot) / dj;
    factors_(i, m) = e;
    residual_(i) -= e * e;
  }
  chosen_[static_cast<std::size_t>(j)] = 1;
  order_.push_back(j);
}

SelectionResult greedy_dpp(const Matrix& kernel, Index budget) {
  GreedyLogDet state(kernel);
  const Index steps = std::min(std::max<Index>(budget, 0), kernel.rows());
  SelectionResult result;
  for (Index s = 0; s < steps; ++s) {
    Index best = -1;
    double best_gain = kNegInf;
    for (Index i = 0; i < kernel.rows(); ++i) {
      if (state.selected(i)) continue;
      const double g = state.gain(i);
      if (best < 0 || g > best_gain) {
        best = i;
        best_gain = g;
      }
    }
    if (best_gain == kNegInf) throw Error(ErrorKind::SingularKernel, "no candidate with a positive Schur complement");
    state.add(best);
    result.indices.push_back(best);
    result.steps.push_back({best, best_gain, 0.0, best_gain});
  }
  return result;
}

IncrementalCoverage::IncrementalCoverage(const LabelVector& labels, const SgtConfig& cfg)
    : labels_(labels), cfg_(cfg), f_(1, 0.0) {}

double IncrementalCoverage::evaluate(const Spectrum& f, Index size, Index k_seen) const {
  return static_cast<double>(k_seen) + sgt_unseen(f, size, cfg_);
}

double IncrementalCoverage::phi_with(Index i) const {
  const Label u = labels_[static_cast<std::size_t>(i)];
  if (cfg_.noise_label && u == *cfg_.noise_label) return phi_;
  const auto it = counts_.find(u);
  const Index n = it == counts_.end() ? 0 : it->second;
  Spectrum f = f_;
  if (static_cast<Index>(f.size()) < n + 2) f.resize(static_cast<std::size_t>(n + 2), 0.0);
  if (n > 0) f[static_cast<std::size_t>(n)] -= 1.0;
  f[static_cast<std::size_t>(n + 1)] += 1.0;
  return evaluate(f, size_ + 1, k_seen() + (n == 0 ? 1 : 0));
}

void IncrementalCoverage::add(Index i) {
  const Label u = labels_[static_cast<std::size_t>(i)];
  if (cfg_.noise_label && u == *cfg_.noise_label) return;
  Index& n = counts_[u];
  if (static_cast<Index>(f_.size()) < n + 2) f_.resize(static_cast<std::size_t>(n + 2), 0.0);
  if (n > 0) f_[static_cast<std::size_t>(n)] -= 1.0;
  ++n;
  f_[static_cast<std::size_t>(n)] += 1.0;
  ++size_;
  phi_ = evaluate(f_, size_, k_seen());
}

SelectionResult greedy_dpp_ucs(const Matrix& kernel, const LabelVector& labels, const SelectionConfig& cfg) {
  check_labels(labels, kernel.rows());
  GreedyLogDet state(kernel);
  IncrementalCoverage coverage(labels, cfg.sgt);
  const Index steps = std::min(std::max<Index>(cfg.budget, 0), kernel.rows());
  SelectionResult result;
  for (Index s = 0; s < steps; ++s) {
    Index best = -1;
    SelectionStep rec;
    for (Index i = 0; i < kernel.rows(); ++i) {
      if (state.selected(i)) continue;
      const double g = state.gain(i);
      const double delta = coverage.phi_with(i) - coverage.phi();
      const double total = g + cfg.lambda * delta;
      if (best < 0 || total > rec.total) {
        best = i;
        rec = {i, g, delta, total};
      }
    }
    if (rec.base_gain == kNegInf)
      throw Error(ErrorKind::SingularKernel, "no candidate with a positive Schur complement");
    state.add(best);
    coverage.add(best);
    result.indices.push_back(best);
    result.steps.push_back(rec);
  }
  result.phi = coverage.phi();
  result.k_seen = coverage.k_seen();
  return result;
}

std::vector<std::vector<Index>> knn_graph(const Matrix& x, Index k) {
  const Index n = x.rows();
  if (k < 1 || k >= n)
    throw Error(ErrorKind::TooFewPoints, "kNN graph needs 1 <= k < N (k=" + std::to_string(k) + ", N=" + std::to_string(n) + ")");
  const Matrix unit = unit_rows(x);
  std::vector<std::vector<Index>> graph(static_cast<std::size_t>(n));
  for_each_distance_block(unit, [&](Index first, const Matrix& block) {
    std::vector<Index> idx;
    for (Index r = 0; r < block.rows(); ++r) {
      const Index i = first + r;
      idx.clear();
      for (Index j = 0; j < n; ++j)
        if (j != i) idx.push_back(j);
      std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), [&](Index a, Index b) {
        const double da = block(r, a);
        const double db = block(r, b);
        return da < db || (da == db && a < b);
      });
      graph[static_cast<std::size_t>(i)].assign(idx.begin(), idx.begin() + k);
    }
  });
  return graph;
}

std::vector<double> votek_votes(const std::vector<std::vector<Index>>& graph, std::span<const Index> selected,
                                double discount_base) {
  const auto n = graph.size();
  std::vector<char> in_set(n, 0);
  for (Index s : selected) in_set[static_cast<std::size_t>(s)] = 1;
  std::vector<double> votes(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    Index overlap = 0;
    for (Index i : graph[j]) overlap += in_set[static_cast<std::size_t>(i)];
    const double weight = std::pow(discount_base, -static_cast<double>(overlap));
    for (Index i : graph[j]) votes[static_cast<std::size_t>(i)] += weight;
  }
  return votes;
}

std::vector<double> votek_votes(const Matrix& x, Index k, std::span<const Index> selected, double discount_base) {
  return votek_votes(knn_graph(x, k), selected, discount_base);
}

SelectionResult votek_select(const std::vector<std::vector<Index>>& graph, const SelectionConfig& cfg) {
  return votek_driver(graph, cfg, 0.0, [](Index) { return 0.0; });
}

SelectionResult votek_select(const Matrix& x, const SelectionConfig& cfg) {
  return votek_select(knn_graph(x, cfg.votek_k), cfg);
}

SelectionResult votek_ucs_select(const std::vector<std::vector<Index>>& graph, const LabelVector& labels,
                                 const CorpusPrior& prior, const SelectionConfig& cfg) {
  check_labels(labels, static_cast<Index>(graph.size()));
  std::vector<double> log_w(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) log_w[i] = std::log(prior.weight(labels[i]));
  SelectionResult r =
      votek_driver(graph, cfg, cfg.lambda, [&](Index i) { return log_w[static_cast<std::size_t>(i)]; });
  finish_coverage(r, labels, cfg.sgt);
  return r;
}

SelectionResult votek_ucs_select(const Matrix& x, const LabelVector& labels, const CorpusPrior& prior,
                                 const SelectionConfig& cfg) {
  return votek_ucs_select(knn_graph(x, cfg.votek_k), labels, prior, cfg);
}

SelectionResult rarity_controls(const std::vector<std::vector<Index>>& graph, const LabelVector& labels,
                                const CorpusPrior& prior, const SelectionConfig& cfg, RarityVariant variant) {
  check_labels(labels, static_cast<Index>(graph.size()));
  const double clusters = static_cast<double>(prior.sizes.size());
  std::vector<double> bonus(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto it = prior.sizes.find(labels[i]);
    if (it == prior.sizes.end())
      throw Error(ErrorKind::IndexOutOfRange, "cluster " + std::to_string(labels[i]) + " missing from the prior");
    const Index size = it->second;
    bonus[i] = variant == RarityVariant::B1 ? 1.0 / static_cast<double>(size)
                                            : std::log(clusters / (prior.g_hat_at(size) + prior.epsilon));
  }
  SelectionResult r =
      votek_driver(graph, cfg, cfg.lambda, [&](Index i) { return bonus[static_cast<std::size_t>(i)]; });
  finish_coverage(r, labels, cfg.sgt);
  return r;
}

SelectionResult rarity_controls(const Matrix& x, const LabelVector& labels, const CorpusPrior& prior,
                                const SelectionConfig& cfg, RarityVariant variant) {
  return rarity_controls(knn_graph(x, cfg.votek_k), labels, prior, cfg, variant);
}

SelectionResult subset_utility_select(std::span<const IndexSet> candidates, std::span<const double> utilities) {
  if (candidates.empty()) throw Error(ErrorKind::EmptyCandidateList, "no candidate subsets");
  if (utilities.size() != candidates.size())
    throw Error(ErrorKind::DimensionOverflow, "one utility per candidate subset is required");
  std::size_t best = 0;
  for (std::size_t c = 1; c < candidates.size(); ++c)
    if (utilities[c] > utilities[best]) best = c;
  SelectionResult r;
  r.indices = candidates[best];
  for (Index i : r.indices) r.steps.push_back({i, utilities[best], 0.0, utilities[best]});
  return r;
}

SelectionResult subset_utility_ucs(std::span<const IndexSet> candidates, std::span<const double> utilities,
                                   const LabelVector& labels, const SelectionConfig& cfg) {
  if (candidates.empty()) throw Error(ErrorKind::EmptyCandidateList, "no candidate subsets");
  if (utilities.size() != candidates.size())
    throw Error(ErrorKind::DimensionOverflow, "one utility per candidate subset is required");
  std::size_t best = 0;
  double best_total = 0.0;
  Coverage best_cov;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const Coverage cov = coverage_phi(labels, candidates[c], cfg.sgt);
    const double total = utilities[c] + cfg.lambda * cov.phi;
    if (c == 0 || total > best_total) {
      best = c;
      best_total = total;
      best_cov = cov;
    }
  }
  SelectionResult r;
  r.indices = candidates[best];
  for (Index i : r.indices) r.steps.push_back({i, utilities[best], best_cov.phi, best_total});
  r.phi = best_cov.phi;
  r.k_seen = best_cov.k_seen;
  return r;
}

std::vector<Index> top_similar(const Matrix& pool, const Vector& query, Index count) {
  const Index n = pool.rows();
  std::vector<double> sim(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) sim[static_cast<std::size_t>(i)] = cosine(pool.row(i).transpose(), query);
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  const Index take = std::min(count, n);
  std::partial_sort(idx.begin(), idx.begin() + take, idx.end(), [&](Index a, Index b) {
    const double sa = sim[static_cast<std::size_t>(a)];
    const double sb = sim[static_cast<std::size_t>(b)];
    return sa > sb || (sa == sb && a < b);
  });
  idx.resize(static_cast<std::size_t>(take));
  return idx;
}

std::vector<IndexSet> propose_candidates(const Matrix& pool, const Vector& query, Index budget, Index candidate_num,
                                         std::uint64_t seed) {
  const Index pool_size = std::max(std::min(candidate_num, pool.rows()), std::min(budget, pool.rows()));
  const auto neighbours = top_similar(pool, query, pool_size);
  const Index b = std::min(budget, pool_size);
  Rng rng(seed);
  std::vector<IndexSet> out;
  const Index count = std::max<Index>(1, candidate_num);
  for (Index c = 0; c < count; ++c) {
    std::vector<std::int64_t> ranks;
    if (c == 0) {
      ranks.resize(static_cast<std::size_t>(b));
      std::iota(ranks.begin(), ranks.end(), std::int64_t{0});
    } else {
      ranks = rng.sample_without_replacement(pool_size, b);
      std::sort(ranks.begin(), ranks.end());
    }
    IndexSet subset;
    for (auto r : ranks) subset.push_back(neighbours[static_cast<std::size_t>(r)]);
    out.push_back(std::move(subset));
  }
  return out;
}

double synthetic_utility(const Matrix& pool, const Vector& query, std::span<const Index> subset) {
  if (subset.empty()) return 0.0;
  double relevance = 0.0;
  for (Index i : subset) relevance += cosine(pool.row(i).transpose(), query);
  relevance /= static_cast<double>(subset.size());
  double redundancy = 0.0;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < subset.size(); ++a)
    for (std::size_t b = a + 1; b < subset.size(); ++b) {
      redundancy += cosine(pool.row(subset[a]).transpose(), pool.row(subset[b]).transpose());
      ++pairs;
    }
  if (pairs) redundancy /= static_cast<double>(pairs);
  return relevance - redundancy;
}

}  // namespace ucs
