#include "ucs/synth_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <unordered_set>

#include "ucs/error.hpp"
#include "ucs/matrix_store.hpp"
#include "ucs/parallel.hpp"
#include "ucs/rng.hpp"

namespace ucs {
namespace {

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

MeanStd population_stats(const std::vector<double>& v) {
  MeanStd out;
  if (v.empty()) return out;
  for (double x : v) out.mean += x;
  out.mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - out.mean) * (x - out.mean);
  out.std = std::sqrt(ss / static_cast<double>(v.size()));
  return out;
}

}  // namespace

Population Population::uniform(Index k) {
  if (k < 1) throw Error(ErrorKind::InvalidArgument, "population needs at least one type");
  auto pop = from_probabilities(std::vector<double>(static_cast<std::size_t>(k), 1.0 / static_cast<double>(k)));
  pop.description_ = "uniform(" + std::to_string(k) + ")";
  return pop;
}

Population Population::zipf(Index k, double exponent) {
  if (k < 1) throw Error(ErrorKind::InvalidArgument, "population needs at least one type");
  std::vector<double> p(static_cast<std::size_t>(k));
  double z = 0.0;
  for (Index i = 0; i < k; ++i) z += p[static_cast<std::size_t>(i)] = std::pow(static_cast<double>(i + 1), -exponent);
  for (auto& x : p) x /= z;
  auto pop = from_probabilities(std::move(p));
  pop.description_ = "zipf(" + std::to_string(k) + "," + format_real(exponent) + ")";
  return pop;
}

Population Population::from_probabilities(std::vector<double> p) {
  if (p.empty()) throw Error(ErrorKind::InvalidArgument, "population needs at least one type");
  double sum = 0.0;
  for (double x : p) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw Error(ErrorKind::InvalidArgument, "probabilities must be finite and >= 0");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw Error(ErrorKind::InvalidArgument, "probabilities must sum to one");
  Population pop;
  for (auto& x : p) x /= sum;
  pop.prob_ = std::move(p);
  pop.cdf_.resize(pop.prob_.size());
  std::partial_sum(pop.prob_.begin(), pop.prob_.end(), pop.cdf_.begin());
  pop.description_ = "explicit(" + std::to_string(pop.prob_.size()) + ")";
  return pop;
}

Label Population::draw(double u) const {
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  const auto idx = std::min<std::ptrdiff_t>(it - cdf_.begin(), static_cast<std::ptrdiff_t>(cdf_.size()) - 1);
  return static_cast<Label>(idx + 1);
}

LabelVector sample_labels(const Population& pop, Index n, std::uint64_t seed) {
  Rng rng(seed);
  LabelVector out(static_cast<std::size_t>(std::max<Index>(n, 0)));
  for (auto& l : out) l = pop.draw(rng.uniform());
  return out;
}

Matrix mixture_embeddings(const LabelVector& labels, Index dim, double spread, std::uint64_t seed) {
  std::map<Label, Vector> centres;
  for (Label l : labels) {
    if (centres.count(l)) continue;
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(l)));
    Vector c(dim);
    for (Index j = 0; j < dim; ++j) c(j) = rng.normal();
    centres.emplace(l, std::move(c));
  }
  Rng rng(derive_seed(seed, 0xffffffffULL));
  Matrix out(static_cast<Index>(labels.size()), dim);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const Vector& c = centres.at(labels[i]);
    for (Index j = 0; j < dim; ++j) out(static_cast<Index>(i), j) = c(j) + spread * rng.normal();
  }
  return out;
}

double expected_new_types_uniform(double k, double n, double m) {
  if (k <= 0.0) return 0.0;
  const double miss = 1.0 - 1.0 / k;
  return k * std::pow(miss, n) * (1.0 - std::pow(miss, m));
}

OracleReport mc_unseen_oracle(const Population& pop, Index n, const SgtConfig& cfg, Index trials, std::uint64_t seed,
                              SamplingMode mode, Index pool_size) {
  if (trials < 1) throw Error(ErrorKind::InvalidArgument, "need at least one trial");
  const auto extra = static_cast<Index>(std::floor(cfg.t * static_cast<double>(n)));
  if (mode == SamplingMode::WithoutReplacement && pool_size < n + extra)
    throw Error(ErrorKind::InvalidArgument, "finite pool smaller than n + t*n");

  struct Trial {
    double truth, sgt, gt, gt_raw;
  };
  std::vector<Trial> results(static_cast<std::size_t>(trials));
  parallel_for(
      trials,
      [&](std::int64_t begin, std::int64_t end) {
        for (std::int64_t tr = begin; tr < end; ++tr) {
          Rng rng(seed + static_cast<std::uint64_t>(tr));
          LabelVector draws;
          if (mode == SamplingMode::WithReplacement) {
            draws.resize(static_cast<std::size_t>(n + extra));
            for (auto& l : draws) l = pop.draw(rng.uniform());
          } else {
            LabelVector finite(static_cast<std::size_t>(pool_size));
            for (auto& l : finite) l = pop.draw(rng.uniform());
            rng.shuffle(finite);
            draws.assign(finite.begin(), finite.begin() + (n + extra));
          }
          std::vector<Index> first(static_cast<std::size_t>(n));
          std::iota(first.begin(), first.end(), Index{0});
          const SubsetSpectrum spec = subset_spectrum(draws, first, cfg.noise_label);
          std::unordered_set<Label> seen(draws.begin(), draws.begin() + n);
          std::unordered_set<Label> fresh;
          for (Index i = n; i < n + extra; ++i) {
            const Label l = draws[static_cast<std::size_t>(i)];
            if (!seen.count(l)) fresh.insert(l);
          }
          const double gt_raw = gt_unseen(spec.f, cfg.t, cfg.bin_size);
          results[static_cast<std::size_t>(tr)] = {static_cast<double>(fresh.size()), sgt_unseen(spec, cfg),
                                                   clamp_unseen(gt_raw), gt_raw};
        }
      },
      16);

  OracleReport rep;
  rep.trials = trials;
  rep.extra_draws = extra;
  for (const auto& r : results) {
    rep.mean_new += r.truth;
    rep.mean_estimate += r.sgt;
    rep.mean_abs_error += std::abs(r.sgt - r.truth);
    rep.mean_gt_estimate += r.gt;
    rep.mean_abs_error_gt += std::abs(r.gt - r.truth);
    rep.mean_abs_error_gt_raw += std::abs(r.gt_raw - r.truth);
  }
  const double tc = static_cast<double>(trials);
  rep.mean_new /= tc;
  rep.mean_estimate /= tc;
  rep.mean_abs_error /= tc;
  rep.mean_gt_estimate /= tc;
  rep.mean_abs_error_gt /= tc;
  rep.mean_abs_error_gt_raw /= tc;
  double ss = 0.0;
  for (const auto& r : results) ss += (r.truth - rep.mean_new) * (r.truth - rep.mean_new);
  rep.std_new = trials > 1 ? std::sqrt(ss / (tc - 1.0)) : 0.0;
  return rep;
}

ClusterStats cluster_stats(const LabelVector& labels) {
  std::map<Label, Index> sizes;
  for (Label l : labels) ++sizes[l];
  ClusterStats st;
  st.clusters = static_cast<Index>(sizes.size());
  std::vector<Index> all;
  all.reserve(sizes.size());
  for (const auto& [l, s] : sizes) {
    all.push_back(s);
    if (s <= 8)
      st.mass[static_cast<std::size_t>(s - 1)] += s;
    else
      st.mass_over += s;
  }
  std::sort(all.begin(), all.end(), std::greater<>());
  all.resize(std::min<std::size_t>(all.size(), 8));
  st.top_sizes = std::move(all);
  return st;
}

ExposureReport exposure_metrics(const LabelVector& labels, std::span<const IndexSet> selections) {
  if (selections.empty()) throw Error(ErrorKind::InvalidArgument, "exposure metrics need at least one selection");
  std::map<Label, Index> sizes;
  for (Label l : labels) ++sizes[l];
  std::vector<double> uniq, size_mean, inv_mean;
  for (const auto& sel : selections) {
    if (sel.empty()) throw Error(ErrorKind::InvalidArgument, "empty selection");
    std::unordered_set<Label> distinct;
    double s_sum = 0.0, inv_sum = 0.0;
    for (Index i : sel) {
      if (i < 0 || i >= static_cast<Index>(labels.size()))
        throw Error(ErrorKind::IndexOutOfRange, "selection index " + std::to_string(i));
      const Label l = labels[static_cast<std::size_t>(i)];
      distinct.insert(l);
      const double sz = static_cast<double>(sizes.at(l));
      s_sum += sz;
      inv_sum += 1.0 / sz;
    }
    const double b = static_cast<double>(sel.size());
    uniq.push_back(static_cast<double>(distinct.size()));
    size_mean.push_back(s_sum / b);
    inv_mean.push_back(inv_sum / b);
  }
  ExposureReport rep;
  rep.selections = static_cast<Index>(selections.size());
  const auto u = population_stats(uniq);
  const auto s = population_stats(size_mean);
  const auto v = population_stats(inv_mean);
  rep.uniq_clusters = u.mean;
  rep.uniq_clusters_std = u.std;
  rep.mean_cluster_size = s.mean;
  rep.mean_cluster_size_std = s.std;
  rep.mean_inv_size = v.mean;
  rep.mean_inv_size_std = v.std;
  return rep;
}

}  // namespace ucs
