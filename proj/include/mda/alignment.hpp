#ifndef MDA_ALIGNMENT_HPP
#define MDA_ALIGNMENT_HPP

#include "mda/features.hpp"
#include "mda/kernels.hpp"
#include "mda/types.hpp"

#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mda {

// ---------------------------------------------------------------------------
// Distribution alignment matrices
// ---------------------------------------------------------------------------

/// Marginal MMD matrix M0 = e e^T with e = (1/ns on source, -1/nt on target).
template <typename Scalar = double>
Mat<Scalar> marginal_mmd(Eigen::Index ns, Eigen::Index nt) {
  if (ns < 1 || nt < 1) throw std::invalid_argument("marginal_mmd: empty domain");
  Vec<Scalar> e(ns + nt);
  e.head(ns).setConstant(Scalar(1) / Scalar(ns));
  e.tail(nt).setConstant(Scalar(-1) / Scalar(nt));
  return e * e.transpose();
}

namespace detail {

inline void check_labels(const Labels& labels, int class_count, const char* what) {
  for (int l : labels) {
    if (l < 1 || l > class_count) {
      throw std::invalid_argument(std::string(what) + ": label " + std::to_string(l) +
                                  " outside 1.." + std::to_string(class_count));
    }
  }
}

/// Indicator vector of class c over stacked (source, target) rows, weighted
/// 1/ns_c and -1/nt_c. Empty when either side has no member of c.
template <typename Scalar>
std::optional<Vec<Scalar>> class_indicator(const Labels& source, const Labels& target, int c) {
  const auto ns = static_cast<Eigen::Index>(source.size());
  const auto nt = static_cast<Eigen::Index>(target.size());
  const auto ns_c = std::count(source.begin(), source.end(), c);
  const auto nt_c = std::count(target.begin(), target.end(), c);
  if (ns_c == 0 || nt_c == 0) return std::nullopt;
  Vec<Scalar> e = Vec<Scalar>::Zero(ns + nt);
  for (Eigen::Index i = 0; i < ns; ++i) {
    if (source[static_cast<std::size_t>(i)] == c) e(i) = Scalar(1) / Scalar(ns_c);
  }
  for (Eigen::Index j = 0; j < nt; ++j) {
    if (target[static_cast<std::size_t>(j)] == c) e(ns + j) = Scalar(-1) / Scalar(nt_c);
  }
  return e;
}

}  // namespace detail

/// Class-conditional MMD matrix for class c; zero when c is missing on
/// either side. `class_count` bounds the admissible label range.
template <typename Scalar = double>
Mat<Scalar> conditional_mmd(const Labels& source_labels, const Labels& target_pseudo_labels, int c,
                            int class_count) {
  detail::check_labels(source_labels, class_count, "conditional_mmd");
  detail::check_labels(target_pseudo_labels, class_count, "conditional_mmd");
  if (c < 1 || c > class_count) throw std::invalid_argument("conditional_mmd: class out of range");
  const auto n = static_cast<Eigen::Index>(source_labels.size() + target_pseudo_labels.size());
  const auto e = detail::class_indicator<Scalar>(source_labels, target_pseudo_labels, c);
  if (!e) return Mat<Scalar>::Zero(n, n);
  return *e * e->transpose();
}

/// Composite MMD matrix (1 - mu) M0 + mu * sum_c Mc, held as a sum of
/// weighted rank-one terms so that M * B costs O(n * C * cols(B)).
template <typename Scalar = double>
class MmdOperator {
 public:
  MmdOperator(const Labels& source_labels, const Labels& target_pseudo_labels, int class_count,
              Scalar mu)
      : mu_(mu) {
    if (!(mu >= Scalar(0) && mu <= Scalar(1))) throw std::invalid_argument("mu outside [0,1]");
    detail::check_labels(source_labels, class_count, "MmdOperator");
    detail::check_labels(target_pseudo_labels, class_count, "MmdOperator");
    const auto ns = static_cast<Eigen::Index>(source_labels.size());
    const auto nt = static_cast<Eigen::Index>(target_pseudo_labels.size());
    if (ns < 1 || nt < 1) throw std::invalid_argument("MmdOperator: empty domain");

    std::vector<Vec<Scalar>> columns;
    std::vector<Scalar> weights;
    Vec<Scalar> e0(ns + nt);
    e0.head(ns).setConstant(Scalar(1) / Scalar(ns));
    e0.tail(nt).setConstant(Scalar(-1) / Scalar(nt));
    columns.push_back(std::move(e0));
    weights.push_back(Scalar(1) - mu);
    for (int c = 1; c <= class_count; ++c) {
      if (auto e = detail::class_indicator<Scalar>(source_labels, target_pseudo_labels, c)) {
        columns.push_back(std::move(*e));
        weights.push_back(mu);
      }
    }
    factors_.resize(ns + nt, static_cast<Eigen::Index>(columns.size()));
    weights_.resize(static_cast<Eigen::Index>(weights.size()));
    for (std::size_t k = 0; k < columns.size(); ++k) {
      factors_.col(static_cast<Eigen::Index>(k)) = columns[k];
      weights_(static_cast<Eigen::Index>(k)) = weights[k];
    }
  }

  Scalar mu() const { return mu_; }
  Eigen::Index rows() const { return factors_.rows(); }
  Eigen::Index cols() const { return factors_.rows(); }
  /// Number of classes present on both sides.
  Eigen::Index active_classes() const { return factors_.cols() - 1; }

  Mat<Scalar> dense() const {
    return factors_ * weights_.asDiagonal() * factors_.transpose();
  }

  /// ||M||_F from the rank-one factors.
  Scalar frobenius_norm() const {
    const Mat<Scalar> gram = factors_.transpose() * factors_;
    const Mat<Scalar> weighted = weights_.asDiagonal() * gram.cwiseAbs2() * weights_.asDiagonal();
    return std::sqrt(std::max(weighted.sum(), Scalar(0)));
  }

  template <typename Derived>
  Mat<Scalar> operator*(const Eigen::MatrixBase<Derived>& B) const {
    const Mat<Scalar> projected = factors_.transpose() * B;
    return factors_ * (weights_.asDiagonal() * projected);
  }

 private:
  Scalar mu_;
  Mat<Scalar> factors_;
  Vec<Scalar> weights_;
};

// ---------------------------------------------------------------------------
// Balance factor
// ---------------------------------------------------------------------------

/// Ridge penalty of the least-squares domain separator behind the A-distance.
inline constexpr double kDomainSeparatorRidge = 1.0;

/// Training error of a ridge least-squares separator with +1 targets on `a`,
/// -1 on `b`, bias column appended and threshold at zero (score >= 0 means a).
template <typename DerivedA, typename DerivedB>
double domain_separator_error(const Eigen::MatrixBase<DerivedA>& a,
                              const Eigen::MatrixBase<DerivedB>& b,
                              double ridge = kDomainSeparatorRidge) {
  using Scalar = typename DerivedA::Scalar;
  const Eigen::Index n = a.rows() + b.rows();
  const Eigen::Index d = a.cols() + 1;
  Mat<Scalar> Z(n, d);
  Z.topLeftCorner(a.rows(), a.cols()) = a;
  Z.bottomLeftCorner(b.rows(), b.cols()) = b;
  Z.col(d - 1).setOnes();
  Vec<Scalar> y(n);
  y.head(a.rows()).setOnes();
  y.tail(b.rows()).setConstant(Scalar(-1));

  Vec<Scalar> scores;
  if (n <= d) {
    Mat<Scalar> G = Z * Z.transpose();
    G.diagonal().array() += Scalar(ridge);
    const Vec<Scalar> alpha = G.ldlt().solve(y);
    scores = G * alpha - Scalar(ridge) * alpha;
  } else {
    Mat<Scalar> H = Z.transpose() * Z;
    H.diagonal().array() += Scalar(ridge);
    const Vec<Scalar> w = H.ldlt().solve(Z.transpose() * y);
    scores = Z * w;
  }
  Eigen::Index errors = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool predicted_a = scores(i) >= Scalar(0);
    if (predicted_a != (i < a.rows())) ++errors;
  }
  return static_cast<double>(errors) / static_cast<double>(n);
}

/// Proxy A-distance 2(1 - 2 err), clamped to [0, 2].
template <typename DerivedA, typename DerivedB>
double proxy_a_distance(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  const double d = 2.0 * (1.0 - 2.0 * domain_separator_error(a, b));
  return std::clamp(d, 0.0, 2.0);
}

template <typename Derived>
Mat<typename Derived::Scalar> select_rows(const Eigen::MatrixBase<Derived>& X, const Labels& labels,
                                          int c) {
  const auto count = std::count(labels.begin(), labels.end(), c);
  Mat<typename Derived::Scalar> out(static_cast<Eigen::Index>(count), X.cols());
  Eigen::Index k = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == c) out.row(k++) = X.row(static_cast<Eigen::Index>(i));
  }
  return out;
}

/// mu = 1 - d_M / (d_M + sum_c d_c) from proxy A-distances; 0.5 when every
/// distance vanishes.
template <typename DerivedS, typename DerivedT>
double estimate_mu(const Eigen::MatrixBase<DerivedS>& Xs, const Eigen::MatrixBase<DerivedT>& Xt,
                   const Labels& source_labels, const Labels& target_pseudo_labels,
                   int class_count) {
  if (Xs.rows() < 1 || Xt.rows() < 1) throw std::invalid_argument("estimate_mu: empty domain");
  if (Xs.cols() != Xt.cols()) throw std::invalid_argument("estimate_mu: dimension mismatch");
  const double d_marginal = proxy_a_distance(Xs, Xt);
  double d_conditional = 0.0;
  for (int c = 1; c <= class_count; ++c) {
    const auto Xs_c = select_rows(Xs, source_labels, c);
    const auto Xt_c = select_rows(Xt, target_pseudo_labels, c);
    if (Xs_c.rows() == 0 || Xt_c.rows() == 0) continue;
    d_conditional += proxy_a_distance(Xs_c, Xt_c);
  }
  const double total = d_marginal + d_conditional;
  if (total < 1e-12) return 0.5;
  return std::clamp(1.0 - d_marginal / total, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Graph Laplacian
// ---------------------------------------------------------------------------

/// Normalized Laplacian of the symmetrized p-nearest-neighbor cosine graph.
template <typename Scalar = double>
struct GraphLaplacian {
  Eigen::SparseMatrix<Scalar> L;

  Eigen::Index rows() const { return L.rows(); }
  Eigen::Index cols() const { return L.cols(); }
  Mat<Scalar> dense() const { return Mat<Scalar>(L); }
};

template <typename Derived>
GraphLaplacian<typename Derived::Scalar> build_laplacian(const Eigen::MatrixBase<Derived>& X,
                                                        Eigen::Index p) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = X.rows();
  if (n < 2) throw std::invalid_argument("build_laplacian: need at least two rows");
  if (p < 1) throw std::invalid_argument("build_laplacian: p must be >= 1");
  p = std::min(p, n - 1);

  Mat<Scalar> unit = X;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Scalar norm = unit.row(i).norm();
    if (norm > Scalar(0)) unit.row(i) /= norm;
  }

  // Directed p-NN edges, then symmetrize by max.
  std::vector<Eigen::Triplet<Scalar>> directed;
  directed.reserve(static_cast<std::size_t>(n * p * 2));
  constexpr Eigen::Index kBlock = 512;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n - 1));
  for (Eigen::Index start = 0; start < n; start += kBlock) {
    const Eigen::Index rows = std::min(kBlock, n - start);
    const Mat<Scalar> sim = unit.middleRows(start, rows) * unit.transpose();
    for (Eigen::Index r = 0; r < rows; ++r) {
      const Eigen::Index i = start + r;
      std::size_t k = 0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j != i) order[k++] = j;
      }
      const auto closer = [&](Eigen::Index a, Eigen::Index b) {
        if (sim(r, a) != sim(r, b)) return sim(r, a) > sim(r, b);
        return a < b;
      };
      std::partial_sort(order.begin(), order.begin() + p, order.end(), closer);
      for (Eigen::Index q = 0; q < p; ++q) {
        const Eigen::Index j = order[static_cast<std::size_t>(q)];
        const Scalar w = std::max(sim(r, j), Scalar(0));
        if (w > Scalar(0)) {
          directed.emplace_back(i, j, w);
          directed.emplace_back(j, i, w);
        }
      }
    }
  }
  Eigen::SparseMatrix<Scalar> W(n, n);
  W.setFromTriplets(directed.begin(), directed.end(),
                    [](const Scalar& a, const Scalar& b) { return std::max(a, b); });

  Vec<Scalar> inv_sqrt_degree = Vec<Scalar>::Zero(n);
  for (Eigen::Index j = 0; j < W.outerSize(); ++j) {
    for (typename Eigen::SparseMatrix<Scalar>::InnerIterator it(W, j); it; ++it) {
      inv_sqrt_degree(it.row()) += it.value();
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const Scalar deg = inv_sqrt_degree(i);
    inv_sqrt_degree(i) = deg > Scalar(0) ? Scalar(1) / std::sqrt(deg) : Scalar(0);
  }

  std::vector<Eigen::Triplet<Scalar>> entries;
  entries.reserve(static_cast<std::size_t>(W.nonZeros() + n));
  for (Eigen::Index i = 0; i < n; ++i) {
    if (inv_sqrt_degree(i) > Scalar(0)) entries.emplace_back(i, i, Scalar(1));
  }
  for (Eigen::Index j = 0; j < W.outerSize(); ++j) {
    for (typename Eigen::SparseMatrix<Scalar>::InnerIterator it(W, j); it; ++it) {
      // Same operand order for (i, j) and (j, i) so L is exactly symmetric.
      const Eigen::Index lo = std::min(it.row(), it.col());
      const Eigen::Index hi = std::max(it.row(), it.col());
      entries.emplace_back(it.row(), it.col(),
                           -(inv_sqrt_degree(lo) * it.value()) * inv_sqrt_degree(hi));
    }
  }
  GraphLaplacian<Scalar> out;
  out.L.resize(n, n);
  out.L.setFromTriplets(entries.begin(), entries.end());
  return out;
}

// ---------------------------------------------------------------------------
// Closed-form coefficients
// ---------------------------------------------------------------------------

namespace detail {

/// Source rows carry exactly one nonzero entry, the same positive value on
/// every row; target rows are zero.
template <typename DerivedA, typename DerivedY>
void check_label_targets(const Eigen::MatrixBase<DerivedA>& mask,
                         const Eigen::MatrixBase<DerivedY>& Y) {
  using Scalar = typename DerivedY::Scalar;
  std::optional<Scalar> scale;
  for (Eigen::Index i = 0; i < Y.rows(); ++i) {
    const Scalar m = mask(i);
    if (m != Scalar(0) && m != Scalar(1)) throw std::invalid_argument("label mask must be 0/1");
    const Eigen::Index nonzeros = (Y.row(i).array() != Scalar(0)).count();
    if (m == Scalar(0)) {
      if (nonzeros != 0) throw std::invalid_argument("unlabeled rows of Y must be zero");
      continue;
    }
    const Scalar sum = Y.row(i).sum();
    if (nonzeros != 1 || !(sum > Scalar(0))) {
      throw std::invalid_argument("labeled rows of Y must be one-hot");
    }
    if (!scale) scale = sum;
    if (sum != *scale) throw std::invalid_argument("labeled rows of Y must share one scale");
  }
}

}  // namespace detail

/// beta = ((A + lambda M + rho L) K + eta I)^-1 A Y by a dense LU solve.
/// M and L may be dense matrices, sparse matrices, or an MmdOperator /
/// sparse Laplacian; anything that multiplies a dense n x n matrix.
template <typename DerivedK, typename MType, typename LType, typename DerivedA, typename DerivedY>
Mat<typename DerivedK::Scalar> solve_beta(const Eigen::MatrixBase<DerivedK>& K, const MType& M,
                                          const LType& L, const Eigen::MatrixBase<DerivedA>& mask,
                                          const Eigen::MatrixBase<DerivedY>& Y, double lambda,
                                          double rho, double eta) {
  using Scalar = typename DerivedK::Scalar;
  const Eigen::Index n = K.rows();
  if (K.cols() != n || M.rows() != n || M.cols() != n || L.rows() != n || L.cols() != n ||
      mask.size() != n || Y.rows() != n) {
    throw std::invalid_argument("solve_beta: shape mismatch");
  }
  if (!(eta > 0.0) || lambda < 0.0 || rho < 0.0) {
    throw std::invalid_argument("solve_beta: need eta > 0 and lambda, rho >= 0");
  }
  detail::check_label_targets(mask, Y);

  const Mat<Scalar> Kd = K;
  Mat<Scalar> system = mask.asDiagonal() * Kd;
  if (lambda != 0.0) system.noalias() += Scalar(lambda) * (M * Kd);
  if (rho != 0.0) system.noalias() += Scalar(rho) * (L * Kd);
  system.diagonal().array() += Scalar(eta);

  const Eigen::PartialPivLU<Mat<Scalar>> lu(system);
  const Mat<Scalar> rhs = mask.asDiagonal() * Y;
  Mat<Scalar> beta = lu.solve(rhs);
  if (!beta.allFinite() || lu.rcond() < Scalar(1e-15)) {
    throw std::runtime_error("solve_beta: singular system");
  }
  return beta;
}

template <typename Scalar, typename Derived>
Mat<Scalar> operator*(const GraphLaplacian<Scalar>& g, const Eigen::MatrixBase<Derived>& B) {
  return g.L * B;
}

// ---------------------------------------------------------------------------
// Classifier
// ---------------------------------------------------------------------------

struct MuMode {
  bool adaptive = true;
  double value = 0.5;  // used when !adaptive

  static MuMode adaptive_mode() { return {true, 0.5}; }
  static MuMode fixed(double mu) { return {false, mu}; }
  bool operator==(const MuMode&) const = default;
};

struct AlignmentConfig {
  double lambda = 10.0;
  double rho = 1.0;
  double eta = 0.1;
  int p = 10;
  int iterations = 10;
  KernelSpec kernel = KernelSpec::rbf_median();
  MuMode mu = MuMode::adaptive_mode();
  /// Divide the composite MMD matrix by its Frobenius norm before solving.
  bool normalize_mmd = true;

  void validate() const;
  bool operator==(const AlignmentConfig&) const = default;
};

struct IterationDiagnostics {
  double mu = 0.0;
  /// Target pseudo-labels that changed in this iteration.
  Eigen::Index churn = 0;
  std::optional<double> target_accuracy;
};

struct TrainedAligner {
  Matrix beta;
  Matrix training_rows;  // stacked source then target
  Eigen::Index source_count = 0;
  KernelSpec kernel;     // bandwidth resolved
  int class_count = 1;
  Labels initial_pseudo_labels;
  Labels target_pseudo_labels;
  std::vector<IterationDiagnostics> diagnostics;
};

struct Prediction {
  Labels labels;
  Matrix scores;
};

struct Evaluation {
  double accuracy = 0.0;
  Eigen::MatrixXi confusion;  // row = true class, column = predicted
};

/// 1-nearest-neighbor labels from source (Euclidean; ties go to the lower index).
Labels nearest_neighbor_labels(const Matrix& Xs, const Labels& source_labels, const Matrix& Xt);

/// Row-wise argmax as 1-based class ids; ties go to the smallest class.
Labels argmax_labels(const Matrix& scores);

Matrix one_hot(const Labels& labels, int class_count);

TrainedAligner fit(const DaTask& task, const AlignmentConfig& config);

Prediction predict(const TrainedAligner& aligner, const Matrix& X_new);

Evaluation evaluate_labels(const Labels& predicted, const Labels& truth, int class_count);

Evaluation evaluate(const TrainedAligner& aligner, const FeatureDataset& labeled_target);

}  // namespace mda

#endif  // MDA_ALIGNMENT_HPP
