#ifndef UCS_PREPROCESS_HPP
#define UCS_PREPROCESS_HPP

#include <filesystem>
#include <optional>
#include <span>
#include <string>

#include "ucs/matrix_store.hpp"
#include "ucs/types.hpp"

namespace ucs {

enum class Pooling { Mean, First, Last };

Pooling parse_pooling(const std::string& name);
std::string to_string(Pooling p);

/// e = sum_t m_t H_t / sum_t m_t. Throws EmptyMask when no token is active.
template <typename Derived>
ColVector<typename Derived::Scalar> masked_mean_pool(const Eigen::MatrixBase<Derived>& hidden,
                                                     std::span<const int> mask);

/// Pools one bundle. `First` and `Last` pick the first and last active token.
Vector pool_bundle(const TokenBundle& bundle, Pooling mode = Pooling::Mean);
Matrix pool_bundles(std::span<const TokenBundle> bundles, Pooling mode = Pooling::Mean);

/// Scales every row to unit l2 norm; zero rows stay zero.
void l2_normalize_rows(Matrix& m);

struct Standardizer {
  Vector mean;
  Vector scale;  // population standard deviation
  double epsilon = 1e-12;

  static Standardizer fit(const Matrix& e, double epsilon = 1e-12);
  /// Columns whose scale is at most epsilon map to zero.
  Matrix apply(const Matrix& e) const;
};

struct PcaBasis {
  Matrix components;  // d x d', orthonormal columns
  Vector explained_variance;
  Vector mean;

  /// Deterministic SVD of the centered data. Requires 1 <= d' <= min(N-1, d).
  /// Each component's first nonzero coordinate is made positive.
  static PcaBasis fit(const Matrix& e, Index d_prime);
  Matrix apply(const Matrix& e) const;
};

struct PreprocessOptions {
  bool standardize = true;
  Index pca_dim = 128;  // 0 disables PCA
  bool l2_normalize = false;
};

/// Fitted standardize -> PCA chain. pca_dim is capped at min(N-1, d) and the
/// stored options hold the capped value.
struct PreprocessModel {
  PreprocessOptions options;
  std::optional<Standardizer> standardizer;
  std::optional<PcaBasis> pca;

  static PreprocessModel fit(const Matrix& e, const PreprocessOptions& options);
  Matrix apply(const Matrix& e) const;

  /// Writes `<prefix>.stats.ucsm`, `<prefix>.basis.ucsm` and `<prefix>.meta`.
  void save(const std::filesystem::path& prefix) const;
  static PreprocessModel load(const std::filesystem::path& prefix);
};

}  // namespace ucs

#include "ucs/detail/preprocess_impl.hpp"

#endif  // UCS_PREPROCESS_HPP
