#include "mda/alignment.hpp"


namespace mda {

void AlignmentConfig::validate() const {
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda >= 0 violated");
  if (!(rho >= 0.0)) throw std::invalid_argument("rho >= 0 violated");
  if (!(eta > 0.0)) throw std::invalid_argument("eta > 0 violated");
  if (p < 1) throw std::invalid_argument("p >= 1 violated");
  if (iterations < 1) throw std::invalid_argument("iterations >= 1 violated");
  if (kernel.kind == KernelKind::rbf && kernel.gamma && !(*kernel.gamma > 0.0)) {
    throw std::invalid_argument("rbf gamma > 0 violated");
  }
  if (!mu.adaptive && !(mu.value >= 0.0 && mu.value <= 1.0)) {
    throw std::invalid_argument("fixed mu must lie in [0, 1]");
  }
}

Labels nearest_neighbor_labels(const Matrix& Xs, const Labels& source_labels, const Matrix& Xt) {
  if (Xs.cols() != Xt.cols()) throw std::invalid_argument("1-NN: dimension mismatch");
  if (static_cast<Eigen::Index>(source_labels.size()) != Xs.rows() || Xs.rows() == 0) {
    throw std::invalid_argument("1-NN: need one label per source row");
  }
  // Squared distances up to the per-target constant |x_t|^2.
  const Vector ss = Xs.rowwise().squaredNorm();
  Labels out(static_cast<std::size_t>(Xt.rows()));
  constexpr Eigen::Index kBlock = 512;
  for (Eigen::Index start = 0; start < Xt.rows(); start += kBlock) {
    const Eigen::Index rows = std::min(kBlock, Xt.rows() - start);
    Matrix dist = Xs * Xt.middleRows(start, rows).transpose() * -2.0;
    dist.colwise() += ss;
    for (Eigen::Index t = 0; t < rows; ++t) {
      Eigen::Index best = 0;
      double best_dist = dist(0, t);
      for (Eigen::Index s = 1; s < Xs.rows(); ++s) {
        if (dist(s, t) < best_dist) {
          best_dist = dist(s, t);
          best = s;
        }
      }
      out[static_cast<std::size_t>(start + t)] = source_labels[static_cast<std::size_t>(best)];
    }
  }
  return out;
}

Labels argmax_labels(const Matrix& scores) {
  Labels out(static_cast<std::size_t>(scores.rows()));
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < scores.cols(); ++c) {
      if (scores(i, c) > scores(i, best)) best = c;
    }
    out[static_cast<std::size_t>(i)] = static_cast<int>(best) + 1;
  }
  return out;
}

Matrix one_hot(const Labels& labels, int class_count) {
  detail::check_labels(labels, class_count, "one_hot");
  Matrix Y = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), class_count);
  for (std::size_t i = 0; i < labels.size(); ++i) Y(static_cast<Eigen::Index>(i), labels[i] - 1) = 1.0;
  return Y;
}

Evaluation evaluate_labels(const Labels& predicted, const Labels& truth, int class_count) {
  if (predicted.size() != truth.size()) throw std::invalid_argument("evaluate: size mismatch");
  if (truth.empty()) throw std::invalid_argument("evaluate: no samples");
  detail::check_labels(predicted, class_count, "evaluate");
  detail::check_labels(truth, class_count, "evaluate");
  Evaluation ev;
  ev.confusion = Eigen::MatrixXi::Zero(class_count, class_count);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ev.confusion(truth[i] - 1, predicted[i] - 1) += 1;
    if (truth[i] == predicted[i]) ++correct;
  }
  ev.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());
  return ev;
}

namespace {

double accuracy_of(const Labels& predicted, const Labels& truth) {
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) correct += predicted[i] == truth[i];
  return static_cast<double>(correct) / static_cast<double>(truth.size());
}

}  // namespace

TrainedAligner fit(const DaTask& task, const AlignmentConfig& config) {
  config.validate();
  const FeatureDataset& source = task.source;
  const FeatureDataset& target = task.target;
  if (!source.labeled()) throw std::invalid_argument("fit: source labels required");
  if (source.dim() != target.dim()) throw std::invalid_argument("fit: dimension mismatch");
  const int C = source.class_count;
  const Labels& ys = *source.labels;
  const Eigen::Index ns = source.size();
  const Eigen::Index nt = target.size();
  const Eigen::Index n = ns + nt;

  TrainedAligner out;
  out.class_count = C;
  out.source_count = ns;
  out.training_rows.resize(n, source.dim());
  out.training_rows.topRows(ns) = source.X;
  out.training_rows.bottomRows(nt) = target.X;
  out.kernel = resolve_kernel(config.kernel, out.training_rows);

  const Matrix K = gram(out.kernel, out.training_rows);
  const auto laplacian = build_laplacian(out.training_rows, config.p);
  // Same evaluation path as predict(), so the final pseudo-labels and
  // predict() on the target rows agree bit for bit.
  const Matrix target_kernel = gram(out.kernel, out.training_rows, target.X).transpose();

  Vector mask = Vector::Zero(n);
  mask.head(ns).setOnes();
  Matrix Y = Matrix::Zero(n, C);
  Y.topRows(ns) = one_hot(ys, C);

  out.initial_pseudo_labels = nearest_neighbor_labels(source.X, ys, target.X);
  Labels pseudo = out.initial_pseudo_labels;

  for (int it = 0; it < config.iterations; ++it) {
    IterationDiagnostics diag;
    diag.mu = config.mu.adaptive ? estimate_mu(source.X, target.X, ys, pseudo, C) : config.mu.value;
    const MmdOperator<double> M(ys, pseudo, C, diag.mu);
    double lambda = config.lambda;
    if (config.normalize_mmd) {
      const double norm = M.frobenius_norm();
      if (norm > 0.0) lambda /= norm;
    }
    out.beta = solve_beta(K, M, laplacian.L, mask, Y, lambda, config.rho, config.eta);

    const Matrix target_scores = target_kernel * out.beta;
    Labels next = argmax_labels(target_scores);
    for (std::size_t j = 0; j < next.size(); ++j) diag.churn += next[j] != pseudo[j];
    pseudo = std::move(next);
    if (target.labeled()) diag.target_accuracy = accuracy_of(pseudo, *target.labels);
    out.diagnostics.push_back(diag);
  }
  out.target_pseudo_labels = std::move(pseudo);
  return out;
}

Prediction predict(const TrainedAligner& aligner, const Matrix& X_new) {
  if (X_new.cols() != aligner.training_rows.cols()) {
    throw std::invalid_argument("predict: dimension mismatch");
  }
  Prediction out;
  const Matrix kernel_rows = gram(aligner.kernel, aligner.training_rows, X_new).transpose();
  out.scores = kernel_rows * aligner.beta;
  out.labels = argmax_labels(out.scores);
  return out;
}

Evaluation evaluate(const TrainedAligner& aligner, const FeatureDataset& labeled_target) {
  if (!labeled_target.labeled()) throw std::invalid_argument("evaluate: target labels missing");
  const Prediction p = predict(aligner, labeled_target.X);
  return evaluate_labels(p.labels, *labeled_target.labels, aligner.class_count);
}

}  // namespace mda
