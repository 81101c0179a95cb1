#include "ucs/latent_dictionary.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ucs/error.hpp"
#include "ucs/matrix_store.hpp"
#include "ucs/parallel.hpp"
#include "ucs/rng.hpp"

namespace ucs {
namespace {

std::vector<Index> canonical_row_order(const Matrix& e) {
  std::vector<Index> order(static_cast<std::size_t>(e.rows()));
  std::iota(order.begin(), order.end(), Index{0});
  const Index d = e.cols();
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    const double* ra = e.data() + a * d;
    const double* rb = e.data() + b * d;
    return std::lexicographical_compare(ra, ra + d, rb, rb + d);
  });
  return order;
}

Matrix initial_atoms(const Matrix& e, Index k, std::uint64_t seed) {
  const Index n = e.rows();
  const Index d = e.cols();
  Rng rng(seed);
  const auto order = canonical_row_order(e);
  const auto picks = rng.sample_without_replacement(n, std::min(n, k));
  Matrix atoms(d, k);
  for (Index j = 0; j < k; ++j) {
    Vector v;
    if (j < static_cast<Index>(picks.size())) v = e.row(order[static_cast<std::size_t>(picks[static_cast<std::size_t>(j)])]).transpose();
    if (v.size() == 0 || v.norm() == 0.0) {
      v.resize(d);
      do {
        for (Index r = 0; r < d; ++r) v(r) = rng.normal();
      } while (v.norm() == 0.0);
    }
    atoms.col(j) = v / v.norm();
  }
  return atoms;
}

// Exact minimization over each unit-norm atom in turn, other atoms fixed.
void update_atoms(Matrix& atoms, const Matrix& target, const Matrix& codes) {
  const Eigen::MatrixXd gram = codes.transpose() * codes;
  const Eigen::MatrixXd proj = target.transpose() * codes;
  for (Index k = 0; k < atoms.cols(); ++k) {
    Vector u = proj.col(k) - atoms * gram.col(k) + atoms.col(k) * gram(k, k);
    const double norm = u.norm();
    if (norm > 0.0 && std::isfinite(norm)) atoms.col(k) = u / norm;
  }
}

bool converged(double prev, double cur, double tol) {
  const double scale = std::max(std::abs(prev), 1e-300);
  return (prev - cur) / scale < tol;
}

// Codes minimizing sum_m ||Y_m - R D^T||^2 + alpha ||R||^2 given the mean of
// the M targets.
Matrix encode_mean(const Matrix& atoms, double alpha, const Matrix& mean_target, double sources) {
  return ridge_encode(atoms, alpha / sources, mean_target);
}

}  // namespace

Matrix ridge_encode(const Matrix& atoms, double ridge_alpha, const Matrix& e) {
  if (e.cols() != atoms.rows())
    throw Error(ErrorKind::DimensionOverflow, "input width " + std::to_string(e.cols()) +
                                                  " does not match dictionary dimension " +
                                                  std::to_string(atoms.rows()));
  if (!(ridge_alpha > 0.0)) throw Error(ErrorKind::InvalidArgument, "ridge_alpha must be positive");
  const Index k = atoms.cols();
  Eigen::MatrixXd system = atoms.transpose() * atoms;
  system.diagonal().array() += ridge_alpha;
  const Eigen::LLT<Eigen::MatrixXd> llt(system);
  // K x d'; row i of the result is (system^{-1} D^T e_i)^T = e_i^T (system^{-1} D^T)^T.
  const Eigen::MatrixXd solve = llt.solve(Eigen::MatrixXd(atoms.transpose()));
  const Matrix projector = solve.transpose();
  Matrix codes(e.rows(), k);
  parallel_for(e.rows(), [&](std::int64_t begin, std::int64_t end) {
    codes.middleRows(begin, end - begin).noalias() = e.middleRows(begin, end - begin) * projector;
  });
  return codes;
}

double dictionary_objective(const Matrix& atoms, double ridge_alpha, const Matrix& e, const Matrix& codes) {
  const std::int64_t grain = kDefaultGrain;
  const std::int64_t blocks = (e.rows() + grain - 1) / grain;
  std::vector<double> partial(static_cast<std::size_t>(std::max<std::int64_t>(blocks, 0)), 0.0);
  parallel_for(
      e.rows(),
      [&](std::int64_t begin, std::int64_t end) {
        const Index len = end - begin;
        const Matrix residual = e.middleRows(begin, len) - codes.middleRows(begin, len) * atoms.transpose();
        partial[static_cast<std::size_t>(begin / grain)] =
            residual.squaredNorm() + ridge_alpha * codes.middleRows(begin, len).squaredNorm();
      },
      grain);
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

CodeBook fit_dictionary(const Matrix& e, const DictionaryOptions& options) {
  if (options.n_atoms < 1) throw Error(ErrorKind::InvalidArgument, "need at least one atom");
  if (!(options.ridge_alpha > 0.0)) throw Error(ErrorKind::InvalidArgument, "ridge_alpha must be positive");
  if (e.rows() == 0 || e.cwiseAbs().maxCoeff() == 0.0)
    throw Error(ErrorKind::DegenerateInput, "input matrix is empty or all zero");

  CodeBook book;
  book.ridge_alpha = options.ridge_alpha;
  book.atoms = initial_atoms(e, options.n_atoms, options.seed);
  Matrix codes = ridge_encode(book.atoms, book.ridge_alpha, e);
  book.objective = dictionary_objective(book.atoms, book.ridge_alpha, e, codes);
  book.objective_history.push_back(book.objective);

  for (int it = 0; it < options.max_iter; ++it) {
    update_atoms(book.atoms, e, codes);
    codes = ridge_encode(book.atoms, book.ridge_alpha, e);
    const double prev = book.objective;
    book.objective = dictionary_objective(book.atoms, book.ridge_alpha, e, codes);
    book.objective_history.push_back(book.objective);
    book.iterations = it + 1;
    if (converged(prev, book.objective, options.tolerance)) break;
  }
  return book;
}

void CodeBook::save(const std::filesystem::path& prefix) const {
  write_matrix(atoms, prefix.string() + ".ucsm");
  RunManifest meta;
  meta.set("ridge_alpha", format_real(ridge_alpha));
  meta.set("objective", format_real(objective));
  meta.set("iterations", std::to_string(iterations));
  meta.set("n_atoms", std::to_string(atoms.cols()));
  meta.set("dim", std::to_string(atoms.rows()));
  meta.write(prefix.string() + ".meta");
}

CodeBook CodeBook::load(const std::filesystem::path& prefix) {
  CodeBook book;
  book.atoms = read_matrix(prefix.string() + ".ucsm");
  const auto meta = RunManifest::read(prefix.string() + ".meta");
  const auto* alpha = meta.get("ridge_alpha");
  if (!alpha) throw Error(ErrorKind::ParseError, prefix.string() + ".meta: missing ridge_alpha");
  book.ridge_alpha = std::stod(*alpha);
  if (const auto* v = meta.get("objective")) book.objective = std::stod(*v);
  if (const auto* v = meta.get("iterations")) book.iterations = std::stoi(*v);
  return book;
}

double orthogonality_error(const Matrix& b) {
  Eigen::MatrixXd g = b.transpose() * b;
  g.diagonal().array() -= 1.0;
  return g.cwiseAbs().maxCoeff();
}

Matrix JointCodeBook::map_source(std::size_t m, const Matrix& e) const {
  if (m >= maps.size()) throw Error(ErrorKind::IndexOutOfRange, "no source " + std::to_string(m));
  return e * maps[m];
}

JointCodeBook fit_joint_dictionary(std::span<const Matrix> sources, const JointOptions& options) {
  if (sources.empty()) throw Error(ErrorKind::InvalidArgument, "no sources");
  const Index n = sources.front().rows();
  Index min_dim = sources.front().cols();
  for (const auto& s : sources) {
    if (s.rows() != n)
      throw Error(ErrorKind::MisalignedSources, "sources have different row counts (" + std::to_string(n) + " vs " +
                                                    std::to_string(s.rows()) + ")");
    min_dim = std::min(min_dim, s.cols());
  }
  const Index dc = options.common_dim > 0 ? options.common_dim : min_dim;
  if (dc > min_dim) throw Error(ErrorKind::InvalidArgument, "common dimension exceeds a source width");
  const auto& dopt = options.dictionary;
  const double count = static_cast<double>(sources.size());

  JointCodeBook jb;
  jb.ridge_alpha = dopt.ridge_alpha;
  for (const auto& s : sources) jb.maps.push_back(Matrix::Identity(s.cols(), dc));

  auto mean_target = [&] {
    Matrix mean = Matrix::Zero(n, dc);
    for (std::size_t m = 0; m < sources.size(); ++m) mean += sources[m] * jb.maps[m];
    return Matrix(mean / count);
  };
  auto objective = [&] {
    const Matrix recon = jb.codes * jb.atoms.transpose();
    double total = dopt.ridge_alpha * jb.codes.squaredNorm();
    for (std::size_t m = 0; m < sources.size(); ++m) total += (sources[m] * jb.maps[m] - recon).squaredNorm();
    return total;
  };
  auto ortho = [&] {
    double worst = 0.0;
    for (const auto& b : jb.maps) worst = std::max(worst, orthogonality_error(b));
    return worst;
  };

  Matrix target = mean_target();
  if (target.cwiseAbs().maxCoeff() == 0.0) throw Error(ErrorKind::DegenerateInput, "mapped sources are all zero");
  jb.atoms = initial_atoms(target, dopt.n_atoms, dopt.seed);
  jb.codes = encode_mean(jb.atoms, dopt.ridge_alpha, target, count);
  jb.objective_history.push_back(objective());
  jb.orthogonality_history.push_back(ortho());

  for (int it = 0; it < dopt.max_iter; ++it) {
    if (!options.fix_maps) {
      const Matrix recon = jb.codes * jb.atoms.transpose();
      for (std::size_t m = 0; m < sources.size(); ++m) {
        const Eigen::MatrixXd cross = sources[m].transpose() * recon;
        Eigen::BDCSVD<Eigen::MatrixXd> svd(cross, Eigen::ComputeThinU | Eigen::ComputeThinV);
        jb.maps[m] = svd.matrixU() * svd.matrixV().transpose();
      }
      target = mean_target();
    }
    update_atoms(jb.atoms, target, jb.codes);
    jb.codes = encode_mean(jb.atoms, dopt.ridge_alpha, target, count);
    const double prev = jb.objective_history.back();
    jb.objective_history.push_back(objective());
    jb.orthogonality_history.push_back(ortho());
    jb.iterations = it + 1;
    if (converged(prev, jb.objective_history.back(), dopt.tolerance)) break;
  }
  return jb;
}

}  // namespace ucs
