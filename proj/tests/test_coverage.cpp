#include <cmath>

#include "test_util.hpp"
#include "ucs/coverage.hpp"

using namespace ucs;

namespace {

Spectrum spectrum(std::initializer_list<std::pair<Index, double>> bins) {
  Index top = 0;
  for (const auto& [s, v] : bins) top = std::max(top, s);
  Spectrum f(static_cast<std::size_t>(top + 1), 0.0);
  for (const auto& [s, v] : bins) f[static_cast<std::size_t>(s)] = v;
  return f;
}

std::vector<Index> all_rows(std::size_t n) {
  std::vector<Index> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<Index>(i);
  return v;
}

}  // namespace

TEST_CASE("subset spectrum examples") {
  const LabelVector labels{7, 7, 8, 9};
  const auto s = subset_spectrum(labels, all_rows(4));
  CHECK(s.counts.at(7) == 2);
  CHECK(s.counts.at(8) == 1);
  CHECK(s.at(1) == 2.0);
  CHECK(s.at(2) == 1.0);
  CHECK(s.k_seen() == 3);

  const auto empty = subset_spectrum(labels, {});
  CHECK(empty.k_seen() == 0);
  CHECK(empty.size == 0);

  const LabelVector same{4, 4, 4};
  CHECK(subset_spectrum(same, all_rows(3)).at(3) == 1.0);

  const std::vector<Index> bad{5};
  CHECK(test::error_kind([&] { subset_spectrum(labels, bad); }) == ErrorKind::IndexOutOfRange);
}

TEST_CASE("noise members are dropped before counting") {
  const LabelVector labels{-1, 2, 2, -1, 3};
  const auto s = subset_spectrum(labels, all_rows(5), Label{-1});
  CHECK(s.size == 3);
  CHECK(s.excluded == 2);
  CHECK(s.k_seen() == 2);
}

TEST_CASE("truncated Good-Turing by hand") {
  CHECK(gt_unseen(spectrum({{1, 2}, {2, 1}}), 1.0, 20) == 1.0);
  CHECK(gt_unseen(spectrum({{1, 3}}), 2.0, 20) == 6.0);
  CHECK(gt_unseen(spectrum({{2, 5}}), 1.0, 20) == -5.0);
  // bins past M are ignored
  CHECK(gt_unseen(spectrum({{1, 1}, {3, 4}}), 1.0, 2) == 1.0);
}

TEST_CASE("k0 rule") {
  CHECK(sgt_k0(1.0, 200) == 4);   // ceil(0.5 log2 100) = ceil(3.32)
  CHECK(sgt_k0(5.0, 10) == 3);    // ceil(0.5 log2 41.67) = ceil(2.69)
  CHECK(sgt_k0(1.0, 1) == 0);     // log2 0.5 < 0
  CHECK(sgt_k0(1.0, 0) == 0);
}

TEST_CASE("binomial tail weights") {
  const auto zero = sgt_weights(1.0, 1.0, 10, 5, Index{0});
  for (double w : zero) CHECK(w == 0.0);
  const auto one = sgt_weights(1.0, 1.0, 10, 5, Index{1});
  CHECK(one[0] == 0.5);
  for (std::size_t s = 1; s < one.size(); ++s) CHECK(one[s] == 0.0);
  const auto four = sgt_weights(1.0, 1.0, 10, 6, Index{4});
  CHECK(four[0] == doctest::Approx(15.0 / 16.0).epsilon(1e-15));
  CHECK(four[1] == doctest::Approx(11.0 / 16.0).epsilon(1e-15));
  CHECK(four[2] == doctest::Approx(5.0 / 16.0).epsilon(1e-15));
  CHECK(four[3] == doctest::Approx(1.0 / 16.0).epsilon(1e-15));
  CHECK(four[4] == 0.0);
}

TEST_CASE("weights are non-increasing in [0, 1] for many configurations") {
  for (double t : {0.5, 1.0, 2.0, 5.0, 8.0})
    for (double offset : {1.0, 1.5, 2.0})
      for (Index n : {1, 10, 100, 10000}) {
        const auto w = sgt_weights(t, offset, n, 20);
        double prev = 1.0;
        for (double v : w) {
          CHECK(v <= prev);
          CHECK(v >= 0.0);
          prev = v;
        }
      }
}

TEST_CASE("SGT unseen estimate") {
  SgtConfig cfg;
  cfg.t = 1.0;
  CHECK(sgt_unseen(Spectrum{}, 0, cfg) == 0.0);
  CHECK(sgt_unseen(spectrum({{2, 5}}), 10, cfg) == 0.0);
  // unit weights give back the clamped classical estimate
  const auto f = spectrum({{1, 2}, {2, 1}});
  const std::vector<double> ones(20, 1.0);
  CHECK(clamp_unseen(weighted_unseen(f, 1.0, ones)) == 1.0);
  CHECK(weighted_unseen(f, 1.0, ones) == gt_unseen(f, 1.0, 20));
  // f1 = 3, n = 3: k0 = ceil(0.5 log2 1.5) = 1, w1 = 1/2, U = 1.5
  CHECK(sgt_unseen(spectrum({{1, 3}}), 3, cfg) == 1.5);
  cfg.k0_override = 0;
  CHECK(sgt_unseen(spectrum({{1, 3}}), 3, cfg) == 0.0);
}

TEST_CASE("clamping maps non-finite values to zero") {
  CHECK(clamp_unseen(-3.0) == 0.0);
  CHECK(clamp_unseen(std::nan("")) == 0.0);
  CHECK(clamp_unseen(INFINITY) == 0.0);
  CHECK(clamp_unseen(2.5) == 2.5);
}

TEST_CASE("power-law smoothing") {
  Spectrum f(5, 0.0);
  for (Index s = 1; s <= 4; ++s) f[static_cast<std::size_t>(s)] = 64.0 * std::pow(static_cast<double>(s), -2.0);
  const Spectrum g = smooth_spectrum(f, 4);
  for (Index s = 1; s <= 4; ++s)
    CHECK(std::abs(g[static_cast<std::size_t>(s)] - f[static_cast<std::size_t>(s)]) <= 1e-6 * f[static_cast<std::size_t>(s)]);

  const Spectrum single = spectrum({{3, 2}});
  CHECK(smooth_spectrum(single, 20) == single);
}

TEST_CASE("smoothed SGT by hand") {
  // f1 = 4, f2 = 1 fits f_s = 4 s^-2 exactly; n = 6, t = 1 gives k0 = 1, w1 = 1/2
  SgtConfig cfg;
  cfg.t = 1.0;
  cfg.smoothing = Smoothing::PowerLaw;
  CHECK(sgt_unseen(spectrum({{1, 4}, {2, 1}}), 6, cfg) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("coverage of singleton and single-cluster subsets") {
  SgtConfig cfg;
  const LabelVector singles{1, 2, 3, 4, 5, 6};
  const auto c = coverage_phi(singles, all_rows(6), cfg);
  CHECK(c.k_seen == 6);
  CHECK(c.phi >= 6.0);
  const LabelVector one{9, 9, 9, 9};
  const auto d = coverage_phi(one, all_rows(4), cfg);
  CHECK(d.k_seen == 1);
  CHECK(d.phi == 1.0);
  CHECK(coverage_phi(singles, {}, cfg).phi == 0.0);
}

TEST_CASE("corpus prior for sizes {1, 1, 2}") {
  const LabelVector labels{10, 20, 30, 30};
  const CorpusPrior p = corpus_prior(labels, Smoothing::Off, 1e-15);
  CHECK(p.g[1] == 2.0);
  CHECK(p.g[2] == 1.0);
  CHECK(p.s_star[1] == 1.0);
  CHECK(p.s_star[2] == 2.0);
  CHECK(p.mass[1] == 0.25);
  CHECK(p.mass[2] == 0.5);
  // pre-normalization weights 4, 4, 2 have mean 10/3
  CHECK(p.weight(10) == doctest::Approx(1.2).epsilon(1e-12));
  CHECK(p.weight(20) == doctest::Approx(1.2).epsilon(1e-12));
  CHECK(p.weight(30) == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(test::error_kind([&] { p.weight(99); }) == ErrorKind::IndexOutOfRange);
}

TEST_CASE("smoothed corpus prior by hand") {
  // four singletons and one pair: g_hat_s = 4 s^-2, s*(1) = 0.5, s*(2) = 4/3, N = 6
  const LabelVector labels{1, 2, 3, 4, 5, 5};
  const CorpusPrior p = corpus_prior(labels, Smoothing::PowerLaw, 1e-15);
  CHECK(p.s_star[1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(p.s_star[2] == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
  // raw weights 12 and 4.5, mean over five clusters 10.5
  CHECK(p.weight(1) == doctest::Approx(12.0 / 10.5).epsilon(1e-10));
  CHECK(p.weight(5) == doctest::Approx(4.5 / 10.5).epsilon(1e-10));
}

TEST_CASE("equal cluster sizes give unit weights") {
  const LabelVector labels{1, 1, 2, 2, 3, 3};
  for (Smoothing s : {Smoothing::Off, Smoothing::PowerLaw}) {
    const CorpusPrior p = corpus_prior(labels, s);
    for (const auto& [u, w] : p.weights) CHECK(w == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("corpus prior is invariant to relabeling") {
  const LabelVector a{1, 1, 1, 2, 3, 3, 4};
  const LabelVector b{40, 40, 40, 7, 11, 11, 2};
  const CorpusPrior pa = corpus_prior(a), pb = corpus_prior(b);
  CHECK(pa.weight(1) == pb.weight(40));
  CHECK(pa.weight(2) == pb.weight(7));
  CHECK(pa.weight(3) == pb.weight(11));
  CHECK(pa.weight(4) == pb.weight(2));
}

TEST_CASE("spectrum mass equals subset size without noise") {
  Rng rng(3);
  LabelVector labels(300);
  for (auto& l : labels) l = static_cast<Label>(rng.below(40)) - 1;
  for (int trial = 0; trial < 50; ++trial) {
    const auto subset = rng.sample_without_replacement(300, static_cast<std::int64_t>(rng.below(300)));
    const auto s = subset_spectrum(labels, subset, Label{-1});
    double mass = 0.0;
    for (std::size_t k = 1; k < s.f.size(); ++k) mass += static_cast<double>(k) * s.f[k];
    CHECK(mass == static_cast<double>(s.size));
    CHECK(s.size + s.excluded == static_cast<Index>(subset.size()));
  }
}

TEST_CASE("smoothing names") {
  CHECK(parse_smoothing("power_law") == Smoothing::PowerLaw);
  CHECK(to_string(Smoothing::Off) == "off");
  CHECK(test::error_kind([] { parse_smoothing("spline"); }) == ErrorKind::ConfigError);
}
