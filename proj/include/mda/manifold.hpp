#ifndef MDA_MANIFOLD_HPP
#define MDA_MANIFOLD_HPP

#include "mda/types.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace mda {

/// A point on the Grassmannian, stored as a d x k orthonormal basis.
template <typename Scalar = double>
struct Subspace {
  Mat<Scalar> basis;

  Eigen::Index ambient_dim() const { return basis.rows(); }
  Eigen::Index dim() const { return basis.cols(); }

  /// ||B^T B - I||_F.
  Scalar orthonormality_error() const {
    return (basis.transpose() * basis - Mat<Scalar>::Identity(dim(), dim())).norm();
  }
};

namespace detail {

template <typename Scalar>
void check_same_shape(const Subspace<Scalar>& P, const Subspace<Scalar>& Q, const char* what) {
  if (P.ambient_dim() != Q.ambient_dim() || P.dim() != Q.dim()) {
    throw std::invalid_argument(std::string(what) + ": subspace shape mismatch");
  }
}

/// Flip each column so that its largest-magnitude entry is positive.
template <typename Scalar>
void canonical_signs(Mat<Scalar>& B) {
  for (Eigen::Index j = 0; j < B.cols(); ++j) {
    Eigen::Index arg = 0;
    B.col(j).cwiseAbs().maxCoeff(&arg);
    if (B(arg, j) < Scalar(0)) B.col(j) *= Scalar(-1);
  }
}

/// Closest orthonormal matrix (polar factor).
template <typename Scalar>
Mat<Scalar> orthonormalize(const Mat<Scalar>& Y) {
  Eigen::JacobiSVD<Mat<Scalar>> svd(Y, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return svd.matrixU() * svd.matrixV().transpose();
}

}  // namespace detail

/// Top-k principal directions of the column-centered data.
template <typename Derived>
Subspace<typename Derived::Scalar> pca_subspace(const Eigen::MatrixBase<Derived>& X,
                                                Eigen::Index k) {
  using Scalar = typename Derived::Scalar;
  if (X.rows() < 2) throw std::invalid_argument("pca_subspace: need at least two rows");
  if (k < 1 || k > std::min(X.rows(), X.cols())) {
    throw std::invalid_argument("pca_subspace: k out of range");
  }
  const Mat<Scalar> centered = X.rowwise() - X.colwise().mean();
  Eigen::BDCSVD<Mat<Scalar>> svd(centered, Eigen::ComputeThinV);
  Subspace<Scalar> out{svd.matrixV().leftCols(k)};
  detail::canonical_signs(out.basis);
  return out;
}

/// Principal angles in nondecreasing order. Cosines come from sv(P^T Q) and
/// sines from sv((I - P P^T) Q); small angles are read off the sines so
/// that nearly equal subspaces resolve below sqrt(machine epsilon).
template <typename Scalar>
Vec<Scalar> principal_angles(const Subspace<Scalar>& P, const Subspace<Scalar>& Q) {
  detail::check_same_shape(P, Q, "principal_angles");
  const Mat<Scalar> cross = P.basis.transpose() * Q.basis;
  const Vec<Scalar> cosines = Eigen::JacobiSVD<Mat<Scalar>>(cross).singularValues();
  const Mat<Scalar> residual = Q.basis - P.basis * cross;
  Vec<Scalar> sines = Eigen::JacobiSVD<Mat<Scalar>>(residual).singularValues();
  // Largest cosine pairs with smallest sine.
  std::sort(sines.data(), sines.data() + sines.size());
  const Eigen::Index k = P.dim();
  Vec<Scalar> theta(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const Scalar c = std::clamp(cosines(i), Scalar(0), Scalar(1));
    const Scalar s = i < sines.size() ? std::clamp(sines(i), Scalar(0), Scalar(1)) : Scalar(0);
    theta(i) = c * c >= Scalar(0.5) ? std::asin(s) : std::acos(c);
  }
  return theta;
}

/// Orthonormal basis of the complement of span(P), from a full Householder QR.
template <typename Scalar>
Mat<Scalar> orthonormal_complement(const Subspace<Scalar>& P) {
  const Eigen::Index d = P.ambient_dim();
  const Eigen::Index k = P.dim();
  Eigen::HouseholderQR<Mat<Scalar>> qr(P.basis);
  const Mat<Scalar> full = qr.householderQ() * Mat<Scalar>::Identity(d, d);
  return full.rightCols(d - k);
}

/// Geodesic flow kernel between two subspaces given an explicit complement
/// of the source. G = [Ps U1, Rs U2] [[L1, L2], [L2, L3]] [Ps U1, Rs U2]^T,
/// which equals twice the integral of Phi(t) Phi(t)^T along the geodesic.
template <typename Scalar>
Mat<Scalar> gfk_kernel(const Subspace<Scalar>& source, const Subspace<Scalar>& target,
                       const Mat<Scalar>& source_complement) {
  detail::check_same_shape(source, target, "gfk_kernel");
  const Eigen::Index d = source.ambient_dim();
  const Eigen::Index k = source.dim();
  if (2 * k > d) throw std::invalid_argument("gfk_kernel: need 2k <= d");
  if (source_complement.rows() != d || source_complement.cols() != d - k) {
    throw std::invalid_argument("gfk_kernel: complement has the wrong shape");
  }

  const Mat<Scalar> A = source.basis.transpose() * target.basis;
  const Mat<Scalar> B = source_complement.transpose() * target.basis;
  Eigen::JacobiSVD<Mat<Scalar>> svd(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Mat<Scalar>& U1 = svd.matrixU();
  const Mat<Scalar>& V = svd.matrixV();
  const Mat<Scalar> BV = B * V;

  constexpr Scalar kSmallAngle = Scalar(1e-8);
  Vec<Scalar> theta(k);
  Mat<Scalar> U2 = Mat<Scalar>::Zero(d - k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const Scalar sine = BV.col(i).norm();
    const Scalar cosine = std::clamp(svd.singularValues()(i), Scalar(0), Scalar(1));
    theta(i) = std::atan2(sine, cosine);
    if (theta(i) >= kSmallAngle) U2.col(i) = -BV.col(i) / sine;
  }
  // B = -U2 Sigma V^T must hold with orthonormal U2 on the non-degenerate angles.
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      if (theta(i) < kSmallAngle || theta(j) < kSmallAngle) continue;
      const Scalar expect = i == j ? Scalar(1) : Scalar(0);
      if (std::abs(U2.col(i).dot(U2.col(j)) - expect) > Scalar(1e-6)) {
        throw std::runtime_error("gfk_kernel: degenerate SVD mismatch");
      }
    }
  }

  Vec<Scalar> l1(k), l2(k), l3(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const Scalar t = theta(i);
    if (t < kSmallAngle) {
      l1(i) = Scalar(2);
      l2(i) = Scalar(0);
      l3(i) = Scalar(0);
    } else {
      l1(i) = Scalar(1) + std::sin(2 * t) / (2 * t);
      l2(i) = (std::cos(2 * t) - Scalar(1)) / (2 * t);
      l3(i) = Scalar(1) - std::sin(2 * t) / (2 * t);
    }
  }

  Mat<Scalar> omega(d, 2 * k);
  omega.leftCols(k) = source.basis * U1;
  omega.rightCols(k) = source_complement * U2;
  Mat<Scalar> lambda = Mat<Scalar>::Zero(2 * k, 2 * k);
  lambda.topLeftCorner(k, k) = l1.asDiagonal();
  lambda.topRightCorner(k, k) = l2.asDiagonal();
  lambda.bottomLeftCorner(k, k) = l2.asDiagonal();
  lambda.bottomRightCorner(k, k) = l3.asDiagonal();
  const Mat<Scalar> G = omega * lambda * omega.transpose();
  return (G + G.transpose()) / Scalar(2);
}

template <typename Scalar>
Mat<Scalar> gfk_kernel(const Subspace<Scalar>& source, const Subspace<Scalar>& target) {
  return gfk_kernel(source, target, orthonormal_complement(source));
}

/// Symmetric square root of a PSD matrix. Eigenvalues at rounding level
/// (or negative) are taken as 0, otherwise sqrt would lift 1e-16 to 1e-8.
template <typename Derived>
Mat<typename Derived::Scalar> psd_sqrt(const Eigen::MatrixBase<Derived>& G) {
  using Scalar = typename Derived::Scalar;
  Eigen::SelfAdjointEigenSolver<Mat<Scalar>> eig(G);
  const Vec<Scalar>& ev = eig.eigenvalues();
  const Scalar floor = ev.cwiseAbs().maxCoeff() * Scalar(ev.size()) *
                       std::numeric_limits<Scalar>::epsilon();
  const Vec<Scalar> root = ev.unaryExpr([floor](Scalar v) {
    return v > floor ? std::sqrt(v) : Scalar(0);
  });
  return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

/// Feature map z = G^(1/2) x applied to every row: X' = X G^(1/2).
template <typename DerivedG, typename DerivedX>
Mat<typename DerivedX::Scalar> gfk_transform(const Eigen::MatrixBase<DerivedG>& G,
                                             const Eigen::MatrixBase<DerivedX>& X) {
  if (G.rows() != G.cols() || G.cols() != X.cols()) {
    throw std::invalid_argument("gfk_transform: dimension mismatch");
  }
  return X * psd_sqrt(G);
}

/// Horizontal tangent at P pointing to Q. Throws on cut-locus inputs where
/// P^T Q is singular.
template <typename Scalar>
Mat<Scalar> grassmann_log(const Subspace<Scalar>& P, const Subspace<Scalar>& Q) {
  detail::check_same_shape(P, Q, "grassmann_log");
  const Mat<Scalar> cross = P.basis.transpose() * Q.basis;
  Eigen::JacobiSVD<Mat<Scalar>> cross_svd(cross);
  const Scalar smallest = cross_svd.singularValues()(cross.cols() - 1);
  if (smallest < Scalar(1e-12)) throw std::domain_error("grassmann_log: cut-locus input");

  const Mat<Scalar> lifted = cross.transpose().fullPivLu().solve(
      (Q.basis - P.basis * cross).transpose()).transpose();
  Eigen::JacobiSVD<Mat<Scalar>> svd(lifted, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec<Scalar> angles = svd.singularValues().array().atan().matrix();
  return svd.matrixU() * angles.asDiagonal() * svd.matrixV().transpose();
}

/// Point reached from P along tangent delta (projected onto the horizontal
/// space first).
template <typename Scalar>
Subspace<Scalar> grassmann_exp(const Subspace<Scalar>& P, const Mat<Scalar>& delta) {
  if (delta.rows() != P.ambient_dim() || delta.cols() != P.dim()) {
    throw std::invalid_argument("grassmann_exp: tangent shape mismatch");
  }
  const Mat<Scalar> horizontal = delta - P.basis * (P.basis.transpose() * delta);
  Eigen::JacobiSVD<Mat<Scalar>> svd(horizontal, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec<Scalar>& sigma = svd.singularValues();
  const Mat<Scalar>& V = svd.matrixV();
  const Vec<Scalar> c = sigma.array().cos().matrix();
  const Vec<Scalar> s = sigma.array().sin().matrix();
  const Mat<Scalar> Y = P.basis * V * c.asDiagonal() * V.transpose() +
                        svd.matrixU() * s.asDiagonal() * V.transpose();
  return Subspace<Scalar>{detail::orthonormalize(Y)};
}

// ---------------------------------------------------------------------------
// Sphere and landmark-shape geodesics
// ---------------------------------------------------------------------------

namespace detail {

template <typename Scalar>
void check_unit(const Vec<Scalar>& p, const char* what) {
  if (std::abs(p.norm() - Scalar(1)) > Scalar(1e-10)) {
    throw std::invalid_argument(std::string(what) + ": input is not a unit vector");
  }
}

}  // namespace detail

/// Angle between unit vectors, stable at both ends of [0, pi].
template <typename Scalar>
Scalar sphere_angle(const Vec<Scalar>& a, const Vec<Scalar>& b) {
  return Scalar(2) * std::atan2((a - b).norm(), (a + b).norm());
}

/// Great-circle interpolation (slerp) between unit vectors.
template <typename Scalar>
Vec<Scalar> sphere_geodesic(const Vec<Scalar>& p1, const Vec<Scalar>& p2, Scalar t) {
  if (p1.size() != p2.size()) throw std::invalid_argument("sphere_geodesic: size mismatch");
  detail::check_unit(p1, "sphere_geodesic");
  detail::check_unit(p2, "sphere_geodesic");
  if ((p1 + p2).norm() < Scalar(1e-10)) {
    throw std::invalid_argument("sphere_geodesic: antipodal endpoints");
  }
  const Scalar omega = sphere_angle(p1, p2);
  if (omega < Scalar(1e-8)) return p1;
  const Scalar s = std::sin(omega);
  return (std::sin((Scalar(1) - t) * omega) / s) * p1 + (std::sin(t * omega) / s) * p2;
}

/// Straight chord between the endpoints pushed back onto the sphere. Stays
/// on the great circle but does not move at constant speed.
template <typename Scalar>
Vec<Scalar> sphere_chord(const Vec<Scalar>& p1, const Vec<Scalar>& p2, Scalar t) {
  const Vec<Scalar> chord = (Scalar(1) - t) * p1 + t * p2;
  const Scalar norm = chord.norm();
  if (norm < Scalar(1e-12)) throw std::invalid_argument("sphere_chord: antipodal endpoints");
  return chord / norm;
}

/// Landmark order starting at the rightmost point and sweeping
/// counterclockwise around the centroid.
std::vector<Eigen::Index> contour_order(const Matrix& landmarks);

/// Evenly spaced points on the boundary of [-1, 1]^2, starting at (1, 0)
/// and running counterclockwise.
Matrix square_landmarks(Eigen::Index count);
/// Evenly spaced points on the unit circle starting at (1, 0), counterclockwise.
Matrix circle_landmarks(Eigen::Index count);

/// Geodesic between two planar landmark shapes on the pre-shape sphere.
/// Target landmarks are matched to source landmarks by contour rank; the
/// output keeps the source row order.
class ShapeGeodesic {
 public:
  ShapeGeodesic(const Matrix& source, const Matrix& target);

  /// Unit-norm centered configuration at t (N x 2).
  Matrix preshape_at(double t) const;
  /// Landmarks at t, with centroid and scale blended linearly.
  Matrix at(double t) const;
  /// Chord-and-renormalize contrast path.
  Matrix naive_at(double t) const;

  /// Target landmarks in source-matched order.
  const Matrix& matched_target() const { return matched_target_; }

 private:
  Matrix rescale(const Vector& flat, double t) const;

  Vector source_pre_;
  Vector target_pre_;
  Matrix matched_target_;
  Eigen::RowVector2d source_centroid_, target_centroid_;
  double source_scale_ = 1.0, target_scale_ = 1.0;
};

Matrix shape_geodesic(const Matrix& source, const Matrix& target, double t);

enum class DemoKind { sphere, shape };

DemoKind parse_demo_kind(const std::string& name);

/// t grid for a demo: `steps` evenly spaced values, plus the fixed
/// {0, 0.05, 0.5, 0.95, 1} grid for the shape demo.
std::vector<double> demo_grid(DemoKind kind, int steps);

/// Writes "curve,t,c0,c1,..." rows for the geodesic and the naive contrast path.
void demo_emit(DemoKind kind, int steps, const std::filesystem::path& out_path);

}  // namespace mda

#endif  // MDA_MANIFOLD_HPP
