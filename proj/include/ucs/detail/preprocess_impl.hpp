#ifndef UCS_DETAIL_PREPROCESS_IMPL_HPP
#define UCS_DETAIL_PREPROCESS_IMPL_HPP

#include "ucs/error.hpp"

namespace ucs {

template <typename Derived>
ColVector<typename Derived::Scalar> masked_mean_pool(const Eigen::MatrixBase<Derived>& hidden,
                                                     std::span<const int> mask) {
  using Scalar = typename Derived::Scalar;
  if (static_cast<Index>(mask.size()) != hidden.rows())
    throw Error(ErrorKind::DimensionOverflow, "mask length does not match token count");
  ColVector<Scalar> sum = ColVector<Scalar>::Zero(hidden.cols());
  Scalar active = 0;
  for (Index t = 0; t < hidden.rows(); ++t) {
    if (mask[static_cast<std::size_t>(t)] == 0) continue;
    sum += hidden.row(t).transpose().template cast<Scalar>();
    active += 1;
  }
  if (active == 0) throw Error(ErrorKind::EmptyMask, "all mask entries are zero");
  return sum / active;
}

}  // namespace ucs

#endif  // UCS_DETAIL_PREPROCESS_IMPL_HPP
