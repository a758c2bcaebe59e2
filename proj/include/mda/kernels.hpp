#ifndef MDA_KERNELS_HPP
#define MDA_KERNELS_HPP

#include "mda/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>

namespace mda {

enum class KernelKind { linear, rbf };

/// Kernel family plus bandwidth. An rbf spec without gamma is resolved with
/// median_bandwidth() on the training rows.
struct KernelSpec {
  KernelKind kind = KernelKind::rbf;
  std::optional<double> gamma;

  static KernelSpec linear() { return {KernelKind::linear, std::nullopt}; }
  static KernelSpec rbf(double g) { return {KernelKind::rbf, g}; }
  static KernelSpec rbf_median() { return {KernelKind::rbf, std::nullopt}; }

  bool operator==(const KernelSpec&) const = default;
};

inline std::string to_string(KernelKind kind) {
  return kind == KernelKind::linear ? "linear" : "rbf";
}

inline KernelKind parse_kernel_kind(const std::string& name) {
  if (name == "linear") return KernelKind::linear;
  if (name == "rbf") return KernelKind::rbf;
  throw std::invalid_argument("unknown kernel kind '" + name + "'");
}

namespace detail {

/// Total order on matrices (shape, then coefficients in storage order) used to
/// pick which operand goes first in a cross product.
template <typename DerivedA, typename DerivedB>
bool precedes(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  if (a.rows() != b.rows()) return a.rows() < b.rows();
  if (a.cols() != b.cols()) return a.cols() < b.cols();
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      if (a(i, j) != b(i, j)) return a(i, j) < b(i, j);
    }
  }
  return false;
}

/// X * Z^T, evaluated so that cross_product(Z, X) is its exact transpose.
template <typename DerivedX, typename DerivedZ>
Mat<typename DerivedX::Scalar> cross_product(const Eigen::MatrixBase<DerivedX>& X,
                                             const Eigen::MatrixBase<DerivedZ>& Z) {
  using Scalar = typename DerivedX::Scalar;
  if (precedes(Z, X)) return Mat<Scalar>(Z * X.transpose()).transpose();
  return X * Z.transpose();
}

}  // namespace detail

/// Pairwise squared Euclidean distances between rows of X and rows of Z.
template <typename DerivedX, typename DerivedZ>
Mat<typename DerivedX::Scalar> squared_distances(const Eigen::MatrixBase<DerivedX>& X,
                                                 const Eigen::MatrixBase<DerivedZ>& Z) {
  using Scalar = typename DerivedX::Scalar;
  const Vec<Scalar> xx = X.rowwise().squaredNorm();
  const Vec<Scalar> zz = Z.rowwise().squaredNorm();
  Mat<Scalar> D = Scalar(-2) * detail::cross_product(X, Z);
  D.colwise() += xx;
  D.rowwise() += zz.transpose();
  return D.cwiseMax(Scalar(0));
}

/// Gram matrix K(X, Z). For rbf with Z == X the diagonal is exactly 1.
template <typename DerivedX, typename DerivedZ>
Mat<typename DerivedX::Scalar> gram(const KernelSpec& spec, const Eigen::MatrixBase<DerivedX>& X,
                                    const Eigen::MatrixBase<DerivedZ>& Z) {
  using Scalar = typename DerivedX::Scalar;
  if (X.cols() != Z.cols()) throw std::invalid_argument("gram: dimension mismatch");
  if (!X.allFinite() || !Z.allFinite()) throw std::invalid_argument("gram: non-finite input");
  if (spec.kind == KernelKind::linear) return detail::cross_product(X, Z);

  if (!spec.gamma || !(*spec.gamma > 0.0)) {
    throw std::invalid_argument("gram: rbf kernel needs a positive bandwidth");
  }
  const auto gamma = static_cast<Scalar>(*spec.gamma);
  return (-gamma * squared_distances(X, Z).array()).exp().matrix();
}

template <typename DerivedX>
Mat<typename DerivedX::Scalar> gram(const KernelSpec& spec, const Eigen::MatrixBase<DerivedX>& X) {
  using Scalar = typename DerivedX::Scalar;
  Mat<Scalar> K = gram(spec, X, X);
  // Symmetric by construction; remove any last-bit asymmetry from the GEMM.
  Mat<Scalar> sym = (K + K.transpose()) / Scalar(2);
  if (spec.kind == KernelKind::rbf) sym.diagonal().setOnes();
  return sym;
}

/// gamma = 1 / median pairwise squared distance, over at most `max_rows`
/// rows chosen by a seeded shuffle. Clamped so that gamma <= 1e12.
template <typename Derived>
double median_bandwidth(const Eigen::MatrixBase<Derived>& X, Eigen::Index max_rows = 1000,
                        std::uint64_t seed = 0x6d6461u) {
  const Eigen::Index n = X.rows();
  if (n < 2) throw std::invalid_argument("median_bandwidth: need at least two rows");

  std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
  std::iota(rows.begin(), rows.end(), Eigen::Index{0});
  if (n > max_rows) {
    std::mt19937_64 rng(seed);
    for (Eigen::Index i = 0; i < max_rows; ++i) {
      const auto span = static_cast<std::uint64_t>(n - i);
      const auto j = i + static_cast<Eigen::Index>(rng() % span);
      std::swap(rows[static_cast<std::size_t>(i)], rows[static_cast<std::size_t>(j)]);
    }
    rows.resize(static_cast<std::size_t>(max_rows));
    std::sort(rows.begin(), rows.end());
  }

  std::vector<double> sq;
  sq.reserve(rows.size() * (rows.size() - 1) / 2);
  for (std::size_t a = 0; a < rows.size(); ++a) {
    for (std::size_t b = a + 1; b < rows.size(); ++b) {
      sq.push_back(static_cast<double>((X.row(rows[a]) - X.row(rows[b])).squaredNorm()));
    }
  }
  const std::size_t mid = sq.size() / 2;
  std::nth_element(sq.begin(), sq.begin() + static_cast<std::ptrdiff_t>(mid), sq.end());
  double median = sq[mid];
  if (sq.size() % 2 == 0) {
    const double lower = *std::max_element(sq.begin(), sq.begin() + static_cast<std::ptrdiff_t>(mid));
    median = 0.5 * (median + lower);
  }
  return 1.0 / std::max(median, 1e-12);
}

/// Fills in a median bandwidth when an rbf spec has none.
template <typename Derived>
KernelSpec resolve_kernel(const KernelSpec& spec, const Eigen::MatrixBase<Derived>& X) {
  if (spec.kind == KernelKind::linear || spec.gamma) return spec;
  return KernelSpec::rbf(median_bandwidth(X));
}

}  // namespace mda

#endif  // MDA_KERNELS_HPP
