#include "ucs/coverage.hpp"

#include <algorithm>
#include <cmath>

#include "ucs/error.hpp"

namespace ucs {

Smoothing parse_smoothing(const std::string& name) {
  if (name == "off" || name == "none") return Smoothing::Off;
  if (name == "power_law") return Smoothing::PowerLaw;
  throw Error(ErrorKind::ConfigError, "unknown smoothing '" + name + "' (off|power_law)");
}

std::string to_string(Smoothing s) { return s == Smoothing::Off ? "off" : "power_law"; }

Spectrum spectrum_from_counts(const std::map<Label, Index>& counts) {
  Index top = 0;
  for (const auto& [u, n] : counts) top = std::max(top, n);
  Spectrum f(static_cast<std::size_t>(top + 1), 0.0);
  for (const auto& [u, n] : counts) f[static_cast<std::size_t>(n)] += 1.0;
  return f;
}

SubsetSpectrum subset_spectrum(const LabelVector& labels, std::span<const Index> subset,
                               std::optional<Label> noise_label) {
  SubsetSpectrum out;
  for (Index i : subset) {
    if (i < 0 || i >= static_cast<Index>(labels.size()))
      throw Error(ErrorKind::IndexOutOfRange, "subset index " + std::to_string(i) + " outside [0, " +
                                                  std::to_string(labels.size()) + ")");
    const Label u = labels[static_cast<std::size_t>(i)];
    if (noise_label && u == *noise_label) {
      ++out.excluded;
      continue;
    }
    ++out.counts[u];
    ++out.size;
  }
  out.f = spectrum_from_counts(out.counts);
  return out;
}

double gt_unseen(const Spectrum& f, double t, Index bin_size) {
  double sum = 0.0;
  double power = 1.0;
  const Index top = std::min<Index>(bin_size, static_cast<Index>(f.size()) - 1);
  for (Index s = 1; s <= top; ++s) {
    power *= -t;
    sum += power * f[static_cast<std::size_t>(s)];
  }
  return -sum;
}

Index sgt_k0(double t, Index sample_size) {
  if (sample_size < 1) return 0;
  const double arg = static_cast<double>(sample_size) * t * t / (t + 1.0);
  const double k = std::ceil(0.5 * std::log2(arg));
  return k > 0.0 ? static_cast<Index>(k) : 0;
}

std::vector<double> sgt_weights(double t, double offset, Index sample_size, Index bin_size,
                                std::optional<Index> k0_override) {
  if (!(t > 0.0)) throw Error(ErrorKind::InvalidArgument, "expansion factor t must be positive");
  if (bin_size < 1) throw Error(ErrorKind::InvalidArgument, "bin size must be >= 1");
  const Index k0 = k0_override ? std::max<Index>(0, *k0_override) : sgt_k0(t, sample_size);
  const double p = offset / (t + offset);
  std::vector<double> pmf(static_cast<std::size_t>(k0 + 1));
  pmf[0] = std::pow(1.0 - p, static_cast<double>(k0));
  for (Index l = 0; l < k0; ++l)
    pmf[static_cast<std::size_t>(l + 1)] =
        pmf[static_cast<std::size_t>(l)] * static_cast<double>(k0 - l) / static_cast<double>(l + 1) * p / (1.0 - p);
  std::vector<double> w(static_cast<std::size_t>(bin_size), 0.0);
  double tail = 0.0;
  for (Index s = k0; s >= 1; --s) {
    tail += pmf[static_cast<std::size_t>(s)];
    if (s <= bin_size) w[static_cast<std::size_t>(s - 1)] = std::min(1.0, tail);
  }
  return w;
}

double weighted_unseen(const Spectrum& f, double t, std::span<const double> weights) {
  double sum = 0.0;
  double power = 1.0;
  const auto top = std::min<std::size_t>(weights.size(), f.empty() ? 0 : f.size() - 1);
  for (std::size_t s = 1; s <= top; ++s) {
    power *= -t;
    sum += power * weights[s - 1] * f[s];
  }
  return -sum;
}

double clamp_unseen(double u) { return std::isfinite(u) && u > 0.0 ? u : 0.0; }

Spectrum smooth_spectrum(const Spectrum& f, Index bin_size) {
  std::vector<double> xs;
  std::vector<double> ys;
  const Index top = std::min<Index>(bin_size, static_cast<Index>(f.size()) - 1);
  for (Index s = 1; s <= top; ++s) {
    const double v = f[static_cast<std::size_t>(s)];
    if (v > 0.0) {
      xs.push_back(std::log(static_cast<double>(s)));
      ys.push_back(std::log(v));
    }
  }
  if (xs.size() < 2) return f;
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  Spectrum out = f;
  if (static_cast<Index>(out.size()) < bin_size + 1) out.resize(static_cast<std::size_t>(bin_size + 1), 0.0);
  for (Index s = 1; s <= bin_size; ++s)
    out[static_cast<std::size_t>(s)] = std::max(0.0, std::exp(intercept + slope * std::log(static_cast<double>(s))));
  return out;
}

double sgt_unseen(const Spectrum& f, Index sample_size, const SgtConfig& cfg) {
  if (sample_size < 1) return 0.0;
  const Spectrum& used = cfg.smoothing == Smoothing::PowerLaw ? smooth_spectrum(f, cfg.bin_size) : f;
  const auto w = sgt_weights(cfg.t, cfg.offset, sample_size, cfg.bin_size, cfg.k0_override);
  return clamp_unseen(weighted_unseen(used, cfg.t, w));
}

Coverage coverage_from_spectrum(const SubsetSpectrum& s, const SgtConfig& cfg) {
  Coverage c;
  c.k_seen = s.k_seen();
  c.u_hat = sgt_unseen(s, cfg);
  c.phi = static_cast<double>(c.k_seen) + c.u_hat;
  return c;
}

Coverage coverage_phi(const LabelVector& labels, std::span<const Index> subset, const SgtConfig& cfg) {
  return coverage_from_spectrum(subset_spectrum(labels, subset, cfg.noise_label), cfg);
}

double CorpusPrior::weight(Label cluster) const {
  const auto it = weights.find(cluster);
  if (it == weights.end()) throw Error(ErrorKind::IndexOutOfRange, "cluster " + std::to_string(cluster) + " has no prior weight");
  return it->second;
}

double CorpusPrior::g_hat_at(Index s) const {
  return s >= 0 && s < static_cast<Index>(g_hat.size()) ? g_hat[static_cast<std::size_t>(s)] : 0.0;
}

CorpusPrior corpus_prior(const LabelVector& labels, Smoothing smoothing, double epsilon,
                         std::optional<Label> noise_label) {
  CorpusPrior prior;
  prior.epsilon = epsilon;
  for (Label u : labels) {
    if (noise_label && u == *noise_label) continue;
    ++prior.sizes[u];
    ++prior.total;
  }
  prior.g = spectrum_from_counts(prior.sizes);
  const auto top = static_cast<Index>(prior.g.size()) - 1;
  // Smooth one bin past the largest size.
  prior.g_hat = smoothing == Smoothing::PowerLaw ? smooth_spectrum(prior.g, top + 1) : prior.g;
  prior.g_hat.resize(std::max<std::size_t>(prior.g_hat.size(), static_cast<std::size_t>(top + 2)), 0.0);

  prior.s_star.assign(static_cast<std::size_t>(top + 1), 0.0);
  prior.mass.assign(static_cast<std::size_t>(top + 1), 0.0);
  const double n = static_cast<double>(std::max<Index>(prior.total, 1));
  for (Index s = 1; s <= top; ++s) {
    const double cur = prior.g_hat[static_cast<std::size_t>(s)];
    const double nxt = prior.g_hat[static_cast<std::size_t>(s + 1)];
    const double adjusted =
        (cur > 0.0 && nxt > 0.0) ? static_cast<double>(s + 1) * nxt / cur : static_cast<double>(s);
    prior.s_star[static_cast<std::size_t>(s)] = adjusted;
    prior.mass[static_cast<std::size_t>(s)] = adjusted / n;
  }
  std::vector<double> raw(static_cast<std::size_t>(top + 1), 0.0);
  double sum = 0.0;
  for (Index s = 1; s <= top; ++s) {
    raw[static_cast<std::size_t>(s)] = 1.0 / (prior.mass[static_cast<std::size_t>(s)] + epsilon);
    sum += prior.g[static_cast<std::size_t>(s)] * raw[static_cast<std::size_t>(s)];
  }
  const double mean = prior.sizes.empty() ? 1.0 : sum / static_cast<double>(prior.sizes.size());
  for (const auto& [u, size] : prior.sizes) prior.weights[u] = raw[static_cast<std::size_t>(size)] / mean;
  return prior;
}

}  // namespace ucs
