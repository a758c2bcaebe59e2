#ifndef MDA_TYPES_HPP
#define MDA_TYPES_HPP

#include <Eigen/Dense>

#include <vector>

namespace mda {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = Mat<double>;
using Vector = Vec<double>;

/// Class ids are 1-based; 0 only appears in files and means "unlabeled".
using Labels = std::vector<int>;

}  // namespace mda

#endif  // MDA_TYPES_HPP
