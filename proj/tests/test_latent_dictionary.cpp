#include <Eigen/LU>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <cmath>

#include "test_util.hpp"
#include "ucs/latent_dictionary.hpp"

using namespace ucs;

namespace {

Matrix orthonormal_columns(Index rows, Index cols, std::uint64_t seed) {
  const Matrix g = test::random_matrix(rows, cols, seed);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  return Matrix(qr.householderQ() * Eigen::MatrixXd::Identity(rows, cols));
}

// Per-example solve of (D^T D + alpha I) r = D^T e with a generic LU.
Matrix normal_equations(const Matrix& d, double alpha, const Matrix& e) {
  Eigen::MatrixXd a = d.transpose() * d;
  a.diagonal().array() += alpha;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  Matrix out(e.rows(), d.cols());
  for (Index i = 0; i < e.rows(); ++i) {
    const Eigen::VectorXd rhs = d.transpose() * e.row(i).transpose();
    out.row(i) = lu.solve(rhs).transpose();
  }
  return out;
}

}  // namespace

TEST_CASE("identity dictionary halves the input at alpha 1") {
  const Matrix e = test::random_matrix(5, 4, 1);
  const Matrix r = ridge_encode(Matrix::Identity(4, 4), 1.0, e);
  CHECK((r - e / 2.0).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("orthonormal dictionary with vanishing alpha projects") {
  const Matrix d = orthonormal_columns(8, 3, 2);
  const Matrix e = test::random_matrix(10, 8, 3);
  const Matrix r = ridge_encode(d, 1e-12, e);
  CHECK((r - e * d).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("ridge codes match the normal-equations oracle") {
  const Matrix d = test::random_matrix(8, 4, 4);
  const Matrix e = test::random_matrix(12, 8, 5);
  const Matrix r = ridge_encode(d, 0.7, e);
  CHECK((r - normal_equations(d, 0.7, e)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("ridge encoding is linear") {
  const Matrix d = test::random_matrix(6, 5, 6);
  const Matrix x = test::random_matrix(4, 6, 7), y = test::random_matrix(4, 6, 8);
  const double a = 1.7, b = -0.3;
  const Matrix lhs = ridge_encode(d, 2.0, a * x + b * y);
  const Matrix rhs = a * ridge_encode(d, 2.0, x) + b * ridge_encode(d, 2.0, y);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("ridge encoding rejects bad shapes and alpha") {
  CHECK(test::error_kind([] { ridge_encode(Matrix::Identity(3, 3), 1.0, Matrix::Ones(2, 4)); }) ==
        ErrorKind::DimensionOverflow);
  CHECK(test::error_kind([] { ridge_encode(Matrix::Identity(3, 3), 0.0, Matrix::Ones(2, 3)); }) ==
        ErrorKind::InvalidArgument);
}

TEST_CASE("normalize_codes") {
  Matrix r(2, 2);
  r << 3, 4, 0, 0;
  const Matrix n = normalize_codes(r, 1e-12);
  CHECK(n(0, 0) == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(n(0, 1) == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(n(1, 0) == 0.0);
  CHECK(n(1, 1) == 0.0);

  const double eps = 0.1;
  const Matrix x = test::random_matrix(50, 3, 9) * 0.2;
  const Matrix nx = normalize_codes(x, eps);
  for (Index i = 0; i < x.rows(); ++i) {
    const double norm = x.row(i).norm();
    CHECK(nx.row(i).norm() <= 1.0);
    CHECK(nx.row(i).norm() >= 1.0 - eps / (norm + eps) - 1e-15);
  }
}

TEST_CASE("data spanned by K orthonormal atoms is reconstructed") {
  const Index k = 4;
  const Matrix atoms = orthonormal_columns(16, k, 10);
  const Matrix coeff = test::random_matrix(200, k, 11);
  const Matrix e = coeff * atoms.transpose();
  DictionaryOptions opts;
  opts.n_atoms = k;
  opts.ridge_alpha = 1e-6;
  opts.max_iter = 50;
  const CodeBook book = fit_dictionary(e, opts);
  const Matrix codes = ridge_encode(book, e);
  const double rel = (e - codes * book.atoms.transpose()).squaredNorm() / e.squaredNorm();
  CHECK(rel < 1e-4);
}

TEST_CASE("single atom converges to the dominant direction") {
  Matrix e = test::random_matrix(80, 5, 12);
  e.col(2) *= 4.0;
  const double alpha = 3.0;
  DictionaryOptions opts;
  opts.n_atoms = 1;
  opts.ridge_alpha = alpha;
  opts.max_iter = 500;
  opts.tolerance = 0.0;
  const CodeBook book = fit_dictionary(e, opts);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(e, Eigen::ComputeThinV);
  const double sigma = svd.singularValues()(0);
  const double expected = e.squaredNorm() - sigma * sigma / (1.0 + alpha);
  CHECK(book.objective == doctest::Approx(expected).epsilon(1e-10));
  CHECK(std::abs(std::abs(book.atoms.col(0).dot(svd.matrixV().col(0))) - 1.0) < 1e-8);
}

TEST_CASE("max_iter 0 returns the seeded initialization") {
  const Matrix e = test::random_matrix(30, 6, 13);
  DictionaryOptions opts;
  opts.n_atoms = 5;
  opts.max_iter = 0;
  const CodeBook book = fit_dictionary(e, opts);
  CHECK(book.iterations == 0);
  REQUIRE(book.objective_history.size() == 1);
  CHECK(book.objective == book.objective_history[0]);
  const Matrix codes = ridge_encode(book, e);
  CHECK(book.objective == doctest::Approx(dictionary_objective(book.atoms, opts.ridge_alpha, e, codes)));
  // every initial atom is a normalized data row
  for (Index j = 0; j < 5; ++j) {
    bool found = false;
    for (Index i = 0; i < e.rows(); ++i)
      if ((e.row(i).transpose() / e.row(i).norm() - book.atoms.col(j)).cwiseAbs().maxCoeff() < 1e-15) found = true;
    CHECK(found);
  }
}

TEST_CASE("objective never increases") {
  const Matrix e = test::random_matrix(150, 10, 14);
  DictionaryOptions opts;
  opts.n_atoms = 6;
  opts.ridge_alpha = 0.5;
  opts.max_iter = 40;
  opts.tolerance = 0.0;
  const CodeBook book = fit_dictionary(e, opts);
  for (std::size_t i = 1; i < book.objective_history.size(); ++i)
    CHECK(book.objective_history[i] <= book.objective_history[i - 1] * (1.0 + 1e-12));
}

TEST_CASE("row permutation leaves the objective unchanged") {
  const Matrix e = test::random_matrix(120, 8, 15);
  Matrix p = e;
  std::vector<Index> perm(120);
  for (Index i = 0; i < 120; ++i) perm[static_cast<std::size_t>(i)] = 119 - i;
  for (Index i = 0; i < 120; ++i) p.row(i) = e.row(perm[static_cast<std::size_t>(i)]);
  DictionaryOptions opts;
  opts.n_atoms = 5;
  opts.max_iter = 20;
  const CodeBook a = fit_dictionary(e, opts), b = fit_dictionary(p, opts);
  CHECK(std::abs(a.objective - b.objective) <= 1e-8 * std::max(1.0, a.objective));
}

TEST_CASE("all-zero input is degenerate") {
  CHECK(test::error_kind([] { fit_dictionary(Matrix::Zero(5, 3), DictionaryOptions{}); }) ==
        ErrorKind::DegenerateInput);
}

TEST_CASE("codebook save/load") {
  const auto dir = test::scratch("dict_io");
  DictionaryOptions opts;
  opts.n_atoms = 3;
  opts.max_iter = 3;
  const Matrix e = test::random_matrix(20, 4, 16);
  const CodeBook book = fit_dictionary(e, opts);
  book.save(dir / "cb");
  const CodeBook back = CodeBook::load(dir / "cb");
  CHECK((back.atoms.array() == book.atoms.array()).all());
  CHECK(back.ridge_alpha == book.ridge_alpha);
  CHECK((ridge_encode(back, e).array() == ridge_encode(book, e).array()).all());
}

TEST_CASE("joint fit with one source and fixed maps reduces to fit_dictionary") {
  const Matrix e = test::random_matrix(90, 6, 17);
  JointOptions jo;
  jo.dictionary.n_atoms = 4;
  jo.dictionary.max_iter = 15;
  jo.fix_maps = true;
  const std::vector<Matrix> sources{e};
  const JointCodeBook jb = fit_joint_dictionary(sources, jo);
  const CodeBook book = fit_dictionary(e, jo.dictionary);
  CHECK(std::abs(jb.objective() - book.objective) <= 1e-8 * book.objective);
  CHECK((jb.atoms - book.atoms).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("joint maps stay orthonormal and beat the identity maps") {
  const Matrix e1 = test::random_matrix(100, 7, 18);
  const Matrix e2 = test::random_matrix(100, 9, 19);
  JointOptions jo;
  jo.dictionary.n_atoms = 3;
  jo.dictionary.max_iter = 25;
  jo.dictionary.tolerance = 0.0;
  const std::vector<Matrix> sources{e1, e2};
  const JointCodeBook free = fit_joint_dictionary(sources, jo);
  for (double o : free.orthogonality_history) CHECK(o < 1e-8);
  CHECK(free.maps[0].rows() == 7);
  CHECK(free.maps[1].rows() == 9);
  CHECK(free.maps[1].cols() == 7);
  jo.fix_maps = true;
  const JointCodeBook fixed = fit_joint_dictionary(sources, jo);
  CHECK(free.objective() <= fixed.objective() * (1.0 + 1e-12));
  const Matrix mapped = free.map_source(1, e2);
  CHECK(mapped.cols() == 7);
}

TEST_CASE("joint fit rejects misaligned sources") {
  const std::vector<Matrix> sources{Matrix::Ones(4, 3), Matrix::Ones(5, 3)};
  CHECK(test::error_kind([&] { fit_joint_dictionary(sources, JointOptions{}); }) == ErrorKind::MisalignedSources);
}
