#ifndef UCS_LATENT_DICTIONARY_HPP
#define UCS_LATENT_DICTIONARY_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "ucs/types.hpp"

namespace ucs {

/// Learned dictionary with atoms stored as unit-norm columns (d' x K).
struct CodeBook {
  Matrix atoms;
  double ridge_alpha = 10.0;
  double objective = 0.0;
  int iterations = 0;
  std::vector<double> objective_history;  // entry 0 is the seeded initialization

  Index dim() const { return atoms.rows(); }
  Index size() const { return atoms.cols(); }

  void save(const std::filesystem::path& prefix) const;
  static CodeBook load(const std::filesystem::path& prefix);
};

struct DictionaryOptions {
  Index n_atoms = 64;
  double ridge_alpha = 10.0;
  int max_iter = 50;
  std::uint64_t seed = 0;
  double tolerance = 1e-6;  // relative objective improvement
};

/// Alternating minimization of sum_i ||e_i - D r_i||^2 + alpha ||r_i||^2.
///
/// Codes are exact ridge solutions given D; atoms are updated one at a time
/// on the unit sphere. Initial atoms are K distinct data rows drawn by `seed`
/// from the rows in lexicographic order.
CodeBook fit_dictionary(const Matrix& e, const DictionaryOptions& options);

/// r_i = (D^T D + alpha I)^{-1} D^T e_i for every row, with one shared factorization.
Matrix ridge_encode(const Matrix& atoms, double ridge_alpha, const Matrix& e);
inline Matrix ridge_encode(const CodeBook& book, const Matrix& e) {
  return ridge_encode(book.atoms, book.ridge_alpha, e);
}

double dictionary_objective(const Matrix& atoms, double ridge_alpha, const Matrix& e, const Matrix& codes);

/// r_i / (||r_i|| + eps). Zero rows stay zero.
template <typename Derived>
RowMatrix<typename Derived::Scalar> normalize_codes(const Eigen::MatrixBase<Derived>& codes,
                                                    typename Derived::Scalar eps = 1e-12) {
  RowMatrix<typename Derived::Scalar> out = codes;
  for (Index i = 0; i < out.rows(); ++i) out.row(i) /= out.row(i).norm() + eps;
  return out;
}

/// Shared dictionary over several aligned embedding sources.
struct JointCodeBook {
  Matrix atoms;                 // d_c x K
  Matrix codes;                 // N x K
  std::vector<Matrix> maps;     // d_m x d_c, orthonormal columns
  double ridge_alpha = 10.0;
  std::vector<double> objective_history;
  std::vector<double> orthogonality_history;  // max_m ||B_m^T B_m - I||_max per iteration
  int iterations = 0;

  double objective() const { return objective_history.empty() ? 0.0 : objective_history.back(); }

  /// E^(m) B^(m) for source m.
  Matrix map_source(std::size_t m, const Matrix& e) const;
};

struct JointOptions {
  DictionaryOptions dictionary;
  Index common_dim = 0;    // 0 means min over source widths
  bool fix_maps = false;   // keep B^(m) at the identity embedding
};

/// Block coordinate descent on
///   sum_m ||E^(m) B^(m) - R D^T||_F^2 + alpha ||R||_F^2,  (B^(m))^T B^(m) = I.
/// Maps come from orthogonal Procrustes, then D and R take one step of the
/// single-source alternation on the averaged mapped data.
JointCodeBook fit_joint_dictionary(std::span<const Matrix> sources, const JointOptions& options);

/// max_ij |(B^T B - I)_ij|.
double orthogonality_error(const Matrix& b);

}  // namespace ucs

#endif  // UCS_LATENT_DICTIONARY_HPP
