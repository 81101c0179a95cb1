#include "ucs/preprocess.hpp"

#include <algorithm>
#include <cmath>

#include "ucs/error.hpp"
#include "ucs/parallel.hpp"

namespace ucs {

Pooling parse_pooling(const std::string& name) {
  if (name == "mean") return Pooling::Mean;
  if (name == "first") return Pooling::First;
  if (name == "last") return Pooling::Last;
  throw Error(ErrorKind::ConfigError, "unknown pooling mode '" + name + "' (mean|first|last)");
}

std::string to_string(Pooling p) {
  switch (p) {
    case Pooling::Mean: return "mean";
    case Pooling::First: return "first";
    case Pooling::Last: return "last";
  }
  return "mean";
}

Vector pool_bundle(const TokenBundle& bundle, Pooling mode) {
  const std::span<const int> mask(bundle.mask);
  if (mode == Pooling::Mean) return masked_mean_pool(bundle.hidden, mask);
  if (static_cast<Index>(mask.size()) != bundle.hidden.rows())
    throw Error(ErrorKind::DimensionOverflow, "mask length does not match token count");
  const Index t_count = bundle.hidden.rows();
  if (mode == Pooling::First) {
    for (Index t = 0; t < t_count; ++t)
      if (mask[static_cast<std::size_t>(t)]) return bundle.hidden.row(t).transpose();
  } else {
    for (Index t = t_count; t-- > 0;)
      if (mask[static_cast<std::size_t>(t)]) return bundle.hidden.row(t).transpose();
  }
  throw Error(ErrorKind::EmptyMask, "all mask entries are zero");
}

Matrix pool_bundles(std::span<const TokenBundle> bundles, Pooling mode) {
  if (bundles.empty()) throw Error(ErrorKind::MissingInput, "no token bundles");
  const Index d = bundles.front().hidden.cols();
  Matrix out(static_cast<Index>(bundles.size()), d);
  for (std::size_t i = 0; i < bundles.size(); ++i) {
    if (bundles[i].hidden.cols() != d)
      throw Error(ErrorKind::DimensionOverflow, "bundle " + std::to_string(i) + " has a different hidden width");
    out.row(static_cast<Index>(i)) = pool_bundle(bundles[i], mode).transpose();
  }
  return out;
}

void l2_normalize_rows(Matrix& m) {
  for (Index i = 0; i < m.rows(); ++i) {
    const double n = m.row(i).norm();
    if (n > 0) m.row(i) /= n;
  }
}

Standardizer Standardizer::fit(const Matrix& e, double epsilon) {
  if (e.rows() < 2) throw Error(ErrorKind::TooFewRows, "standardizer needs at least 2 rows");
  Standardizer s;
  s.epsilon = epsilon;
  s.mean = e.colwise().mean().transpose();
  s.scale = ((e.rowwise() - s.mean.transpose()).array().square().colwise().sum() / static_cast<double>(e.rows()))
                .sqrt()
                .transpose();
  return s;
}

Matrix Standardizer::apply(const Matrix& e) const {
  if (e.cols() != mean.size()) throw Error(ErrorKind::DimensionOverflow, "standardizer width mismatch");
  Matrix out(e.rows(), e.cols());
  parallel_for(e.rows(), [&](std::int64_t begin, std::int64_t end) {
    for (Index i = begin; i < end; ++i)
      for (Index j = 0; j < e.cols(); ++j)
        out(i, j) = scale(j) > epsilon ? (e(i, j) - mean(j)) / scale(j) : 0.0;
  });
  return out;
}

PcaBasis PcaBasis::fit(const Matrix& e, Index d_prime) {
  const Index n = e.rows();
  const Index d = e.cols();
  if (d_prime < 1 || d_prime > std::min(n - 1, d))
    throw Error(ErrorKind::InvalidArgument, "PCA dimension must lie in [1, min(N-1, d)]; got " +
                                                std::to_string(d_prime));
  PcaBasis basis;
  basis.mean = e.colwise().mean().transpose();
  const Eigen::MatrixXd centered = e.rowwise() - basis.mean.transpose();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  const Eigen::MatrixXd& v = svd.matrixV();
  basis.components = v.leftCols(d_prime);
  basis.explained_variance =
      svd.singularValues().head(d_prime).array().square() / static_cast<double>(n - 1);
  for (Index c = 0; c < d_prime; ++c) {
    for (Index r = 0; r < d; ++r) {
      const double w = basis.components(r, c);
      if (std::abs(w) > 1e-10) {
        if (w < 0) basis.components.col(c) *= -1.0;
        break;
      }
    }
  }
  return basis;
}

Matrix PcaBasis::apply(const Matrix& e) const {
  if (e.cols() != mean.size()) throw Error(ErrorKind::DimensionOverflow, "PCA width mismatch");
  Matrix out(e.rows(), components.cols());
  parallel_for(e.rows(), [&](std::int64_t begin, std::int64_t end) {
    const Index len = end - begin;
    out.middleRows(begin, len).noalias() = (e.middleRows(begin, len).rowwise() - mean.transpose()) * components;
  });
  return out;
}

PreprocessModel PreprocessModel::fit(const Matrix& e, const PreprocessOptions& options) {
  PreprocessModel model;
  model.options = options;
  Matrix x = e;
  if (options.l2_normalize) l2_normalize_rows(x);
  if (options.standardize) {
    model.standardizer = Standardizer::fit(x);
    x = model.standardizer->apply(x);
  }
  if (options.pca_dim > 0) {
    model.options.pca_dim = std::min({options.pca_dim, x.rows() - 1, x.cols()});
    model.pca = PcaBasis::fit(x, model.options.pca_dim);
  }
  return model;
}

Matrix PreprocessModel::apply(const Matrix& e) const {
  Matrix x = e;
  if (options.l2_normalize) l2_normalize_rows(x);
  if (standardizer) x = standardizer->apply(x);
  if (pca) x = pca->apply(x);
  return x;
}

void PreprocessModel::save(const std::filesystem::path& prefix) const {
  RunManifest meta;
  meta.set("standardize", options.standardize ? "1" : "0");
  meta.set("pca_dim", std::to_string(options.pca_dim));
  meta.set("l2_normalize", options.l2_normalize ? "1" : "0");
  if (standardizer) {
    meta.set("epsilon", format_real(standardizer->epsilon));
    Matrix stats(2, standardizer->mean.size());
    stats.row(0) = standardizer->mean.transpose();
    stats.row(1) = standardizer->scale.transpose();
    write_matrix(stats, prefix.string() + ".stats.ucsm");
  }
  if (pca) {
    Matrix basis(pca->components.rows() + 1, pca->components.cols());
    basis.row(0) = pca->explained_variance.transpose();
    basis.bottomRows(pca->components.rows()) = pca->components;
    write_matrix(basis, prefix.string() + ".basis.ucsm");
    Matrix center(1, pca->mean.size());
    center.row(0) = pca->mean.transpose();
    write_matrix(center, prefix.string() + ".center.ucsm");
  }
  meta.write(prefix.string() + ".meta");
}

PreprocessModel PreprocessModel::load(const std::filesystem::path& prefix) {
  const auto meta = RunManifest::read(prefix.string() + ".meta");
  PreprocessModel model;
  auto flag = [&](const char* key) {
    const auto* v = meta.get(key);
    return v && *v == "1";
  };
  model.options.standardize = flag("standardize");
  model.options.l2_normalize = flag("l2_normalize");
  if (const auto* v = meta.get("pca_dim")) model.options.pca_dim = std::stoll(*v);
  if (model.options.standardize) {
    const Matrix stats = read_matrix(prefix.string() + ".stats.ucsm");
    Standardizer s;
    s.mean = stats.row(0).transpose();
    s.scale = stats.row(1).transpose();
    if (const auto* v = meta.get("epsilon")) s.epsilon = std::stod(*v);
    model.standardizer = s;
  }
  if (model.options.pca_dim > 0) {
    const Matrix basis = read_matrix(prefix.string() + ".basis.ucsm");
    const Matrix center = read_matrix(prefix.string() + ".center.ucsm");
    PcaBasis p;
    p.explained_variance = basis.row(0).transpose();
    p.components = basis.bottomRows(basis.rows() - 1);
    p.mean = center.row(0).transpose();
    model.pca = p;
  }
  return model;
}

}  // namespace ucs
