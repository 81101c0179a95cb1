#ifndef UCS_COVERAGE_HPP
#define UCS_COVERAGE_HPP

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ucs/types.hpp"

namespace ucs {

/// f[s] = number of clusters seen exactly s times; f[0] is unused and 0.
/// Stored as reals so a smoothed spectrum has the same shape.
using Spectrum = std::vector<double>;

struct SubsetSpectrum {
  std::map<Label, Index> counts;  // n_u(S)
  Spectrum f;
  Index size = 0;       // |S| after noise exclusion, equals sum_s s f_s
  Index excluded = 0;   // members dropped as noise

  Index k_seen() const { return static_cast<Index>(counts.size()); }
  double at(Index s) const { return s < static_cast<Index>(f.size()) ? f[static_cast<std::size_t>(s)] : 0.0; }
};

enum class Smoothing { Off, PowerLaw };

Smoothing parse_smoothing(const std::string& name);
std::string to_string(Smoothing s);

struct SgtConfig {
  double t = 5.0;
  Index bin_size = 20;  // M
  double offset = 1.0;  // alpha in [1, 2]
  Smoothing smoothing = Smoothing::Off;
  std::optional<Label> noise_label;
  std::optional<Index> k0_override;
};

/// Counts and spectrum of labels over `subset`; members carrying the noise
/// label are dropped before counting. Throws IndexOutOfRange.
SubsetSpectrum subset_spectrum(const LabelVector& labels, std::span<const Index> subset,
                               std::optional<Label> noise_label = std::nullopt);

Spectrum spectrum_from_counts(const std::map<Label, Index>& counts);

/// Truncated Good-Turing: -sum_{s=1}^{M} (-t)^s f_s, unclamped.
double gt_unseen(const Spectrum& f, double t, Index bin_size);

/// ceil(0.5 * log2(n t^2 / (t + 1))), floored at 0.
Index sgt_k0(double t, Index sample_size);

/// w_s = P(L >= s), L ~ Binomial(k0, offset / (t + offset)), for s = 1..M
/// (element s-1 of the result).
std::vector<double> sgt_weights(double t, double offset, Index sample_size, Index bin_size,
                                std::optional<Index> k0_override = std::nullopt);

/// -sum_s (-t)^s w_s f_s over the bins covered by `weights`, unclamped.
double weighted_unseen(const Spectrum& f, double t, std::span<const double> weights);

/// max(0, u), with NaN/Inf mapped to 0.
double clamp_unseen(double u);

/// Least-squares fit of log f_s = a + b log s over nonzero bins s <= M, then
/// f_s <- exp(a + b log s) for s = 1..M. Needs two nonzero bins, otherwise
/// the input comes back unchanged.
Spectrum smooth_spectrum(const Spectrum& f, Index bin_size);

/// Smoothing (optional), offset-damped weights, then clamping.
double sgt_unseen(const Spectrum& f, Index sample_size, const SgtConfig& cfg);
inline double sgt_unseen(const SubsetSpectrum& s, const SgtConfig& cfg) { return sgt_unseen(s.f, s.size, cfg); }

struct Coverage {
  double phi = 0.0;
  Index k_seen = 0;
  double u_hat = 0.0;
};

Coverage coverage_from_spectrum(const SubsetSpectrum& s, const SgtConfig& cfg);

/// Phi(S) = K_seen(S) + clamped SGT unseen estimate.
Coverage coverage_phi(const LabelVector& labels, std::span<const Index> subset, const SgtConfig& cfg);

/// Corpus-level rarity weights for query-independent selection.
struct CorpusPrior {
  Spectrum g;              // g[s]: clusters of global size s
  Spectrum g_hat;          // smoothed (or raw) spectrum
  std::vector<double> s_star;      // adjusted count per size, index s
  std::vector<double> mass;        // p(s) = s* / N
  std::map<Label, Index> sizes;    // n_u
  std::map<Label, double> weights; // w_u, mean 1
  Index total = 0;                 // N after noise exclusion
  double epsilon = 1e-6;

  /// w_u for a cluster; throws IndexOutOfRange for clusters not in the prior.
  double weight(Label cluster) const;
  double g_hat_at(Index s) const;
};

CorpusPrior corpus_prior(const LabelVector& labels, Smoothing smoothing = Smoothing::PowerLaw, double epsilon = 1e-6,
                         std::optional<Label> noise_label = std::nullopt);

}  // namespace ucs

#endif  // UCS_COVERAGE_HPP
