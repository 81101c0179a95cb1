#ifndef UCS_TYPES_HPP
#define UCS_TYPES_HPP

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace ucs {

// Rows are examples.
template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using ColVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using real = double;
using Matrix = RowMatrix<real>;
using Vector = ColVector<real>;

using Index = Eigen::Index;

// Cluster IDs. Pre-remap DBSCAN output uses -1 for noise.
using Label = std::int64_t;
using LabelVector = std::vector<Label>;
using IndexSet = std::vector<Index>;

inline constexpr Label kNoise = -1;

}  // namespace ucs

#endif  // UCS_TYPES_HPP
