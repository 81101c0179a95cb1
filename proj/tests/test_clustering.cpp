#include <cmath>
#include <numeric>

#include "dbscan_reference.hpp"
#include "test_util.hpp"
#include "ucs/clustering.hpp"
#include "ucs/parallel.hpp"

using namespace ucs;

namespace {

Matrix three_codes() {
  Matrix x(3, 2);
  const double h = 1.0 / std::sqrt(2.0);
  x << 1, 0, 0, 1, h, h;
  return x;
}

double naive_cosine_distance(const Matrix& x, Index i, Index j) {
  double dot = 0.0, a = 0.0, b = 0.0;
  for (Index c = 0; c < x.cols(); ++c) {
    dot += x(i, c) * x(j, c);
    a += x(i, c) * x(i, c);
    b += x(j, c) * x(j, c);
  }
  return 1.0 - dot / (std::sqrt(a) * std::sqrt(b));
}

}  // namespace

TEST_CASE("cosine distance examples") {
  Matrix x(4, 2);
  x << 1, 0, 0, 1, 1, 1, 1, 0;
  const Matrix d = cosine_distance_matrix(x);
  CHECK(d(0, 1) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(d(0, 3) == 0.0);
  CHECK(d(0, 2) == doctest::Approx(1.0 - 1.0 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(d(1, 1) == 0.0);
}

TEST_CASE("blocked distances agree with a naive loop and are bitwise symmetric") {
  const Matrix x = test::random_matrix(600, 7, 3);
  const Matrix d = cosine_distance_matrix(x);
  for (Index i = 0; i < 600; i += 37)
    for (Index j = 0; j < 600; j += 41) CHECK(std::abs(d(i, j) - (i == j ? 0.0 : naive_cosine_distance(x, i, j))) < 1e-12);
  CHECK((d.array() == d.transpose().array()).all());
}

TEST_CASE("distances do not depend on thread count") {
  const Matrix x = test::random_matrix(700, 5, 4);
  set_num_threads(1);
  const Matrix a = cosine_distance_matrix(x);
  const auto ka = knn_distances(x, 5);
  set_num_threads(4);
  const Matrix b = cosine_distance_matrix(x);
  const auto kb = knn_distances(x, 5);
  set_num_threads(0);
  CHECK((a.array() == b.array()).all());
  CHECK(ka == kb);
}

TEST_CASE("zero rows sit at distance 1") {
  Matrix x(2, 2);
  x << 0, 0, 1, 0;
  const Matrix d = cosine_distance_matrix(x);
  CHECK(d(0, 1) == 1.0);
  CHECK(d(0, 0) == 0.0);
}

TEST_CASE("kNN quantile eps examples") {
  const Matrix x = three_codes();
  const auto knn = knn_distances(x, 1);
  for (double v : knn) CHECK(v == doctest::Approx(1.0 - 1.0 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(knn_quantile_eps(x, 1, 0.37) == doctest::Approx(0.29289).epsilon(1e-4));

  CHECK(knn_quantile_eps(Matrix::Ones(5, 3), 2, 0.5) == 0.0);

  const Matrix r = test::random_matrix(40, 4, 5);
  const auto all = knn_distances(r, 3);
  CHECK(knn_quantile_eps(r, 3, 0.0) == *std::min_element(all.begin(), all.end()));
  CHECK(knn_quantile_eps(r, 3, 1.0) == *std::max_element(all.begin(), all.end()));
  CHECK(test::error_kind([&] { knn_distances(r, 40); }) == ErrorKind::TooFewPoints);
  CHECK(test::error_kind([&] { knn_distances(r, 0); }) == ErrorKind::TooFewPoints);
}

TEST_CASE("quantile interpolates between order statistics") {
  CHECK(quantile_linear({1, 2, 3, 4}, 0.5) == 2.5);
  CHECK(quantile_linear({4, 1, 3}, 0.25) == 1.0 + 0.5 * 2.0);
  CHECK(test::error_kind([] { quantile_linear({1.0}, 1.5); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("dbscan on the three codes") {
  const Matrix x = three_codes();
  CHECK(dbscan(x, 0.3, 1) == LabelVector{0, 0, 0});
  CHECK(dbscan(x, 0.1, 1) == LabelVector{0, 1, 2});
  CHECK(dbscan(x, 0.3, 5) == LabelVector{-1, -1, -1});
}

TEST_CASE("remap noise to singletons") {
  CHECK(remap_noise_to_singletons({0, 0, -1, 1, -1}).labels == LabelVector{1, 1, 3, 2, 4});
  CHECK(remap_noise_to_singletons({2, 2, 0}).labels == LabelVector{1, 1, 2});
  CHECK(remap_noise_to_singletons({-1, -1}).labels == LabelVector{1, 2});
  CHECK(remap_noise_to_singletons({-1, -1}).cluster_count() == 2);
}

TEST_CASE("argmax atoms") {
  Matrix r(1, 3);
  r << 0.1, -0.9, 0.2;
  CHECK(argmax_atoms(r).raw_labels == LabelVector{1});
  Matrix t(1, 2);
  t << 0.5, 0.5;
  CHECK(argmax_atoms(t).raw_labels == LabelVector{0});
  Matrix one_hot = Matrix::Zero(5, 4);
  one_hot(0, 2) = 1;
  one_hot(1, 0) = 1;
  one_hot(2, 2) = 1;
  one_hot(3, 3) = 1;
  one_hot(4, 0) = 1;
  const auto a = argmax_atoms(one_hot);
  CHECK(a.labels == LabelVector{1, 2, 1, 3, 2});
  CHECK(a.cluster_count() == 3);
}

TEST_CASE("min_samples 1 dbscan equals eps-graph components") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const Index n = 50 + static_cast<Index>(seed * 13 % 400);
    const Matrix x = test::blob_pool(n, 6, 5, 0.15, seed);
    const Matrix d = cosine_distance_matrix(x);
    const double eps = knn_quantile_eps(x, 5, 0.3);
    CHECK(canonical_partition(dbscan(x, eps, 1)) == canonical_partition(test::eps_components(d, eps)));
  }
}

TEST_CASE("border points follow the reference rule") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Matrix x = test::blob_pool(120, 4, 3, 0.3, 100 + seed);
    const Matrix d = cosine_distance_matrix(x);
    const double eps = knn_quantile_eps(x, 4, 0.5);
    const Index ms = 2 + static_cast<Index>(seed % 5);
    const LabelVector got = dbscan(x, eps, ms);
    const LabelVector want = test::reference_dbscan(d, eps, ms);
    CHECK(remap_noise_to_singletons(got).labels == remap_noise_to_singletons(want).labels);
  }
}

TEST_CASE("permuting rows permutes the partition") {
  const Matrix x = test::blob_pool(200, 5, 4, 0.1, 77);
  DbscanParams p;
  p.k = 5;
  p.q = 0.2;
  p.min_samples = 3;
  const LabelVector base = cluster_dbscan(x, p, ClusterMethod::Dbscan).labels;
  std::vector<Index> perm(200);
  std::iota(perm.begin(), perm.end(), Index{0});
  Rng rng(5);
  rng.shuffle(perm);
  Matrix px(200, 5);
  for (Index i = 0; i < 200; ++i) px.row(i) = x.row(perm[static_cast<std::size_t>(i)]);
  const LabelVector permuted = cluster_dbscan(px, p, ClusterMethod::Dbscan).labels;
  LabelVector pulled_back(200);
  for (Index i = 0; i < 200; ++i)
    pulled_back[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = permuted[static_cast<std::size_t>(i)];
  CHECK(canonical_partition(pulled_back) == canonical_partition(base));
}

TEST_CASE("positive row scaling does not change clusters") {
  const Matrix x = test::blob_pool(150, 4, 3, 0.1, 78);
  Matrix scaled = x;
  Rng rng(6);
  for (Index i = 0; i < scaled.rows(); ++i) scaled.row(i) *= std::ldexp(1.0, static_cast<int>(rng.below(8)) - 4);
  const DbscanParams p;
  CHECK(cluster_dbscan(x, p, ClusterMethod::DictDbscan).labels ==
        cluster_dbscan(scaled, p, ClusterMethod::DictDbscan).labels);
}

TEST_CASE("dbscan and dict_dbscan differ only by tag") {
  const Matrix x = test::blob_pool(80, 4, 3, 0.1, 79);
  const auto a = cluster_dbscan(x, DbscanParams{}, ClusterMethod::Dbscan);
  const auto b = cluster_dbscan(x, DbscanParams{}, ClusterMethod::DictDbscan);
  CHECK(a.labels == b.labels);
  CHECK(a.eps == b.eps);
  CHECK(a.method != b.method);
  for (Label l : a.labels) CHECK(l >= 1);
}

TEST_CASE("eps override skips the heuristic") {
  DbscanParams p;
  p.eps_override = 0.1;
  const auto a = cluster_dbscan(three_codes(), p, ClusterMethod::DictDbscan);
  CHECK(a.eps == 0.1);
  CHECK(a.labels == LabelVector{1, 2, 3});
}

TEST_CASE("cluster method names") {
  CHECK(parse_cluster_method("dict_argmax") == ClusterMethod::DictArgmax);
  CHECK(to_string(ClusterMethod::DictDbscan) == "dict_dbscan");
  CHECK(test::error_kind([] { parse_cluster_method("kmeans"); }) == ErrorKind::ConfigError);
}
