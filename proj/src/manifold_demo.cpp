#include "mda/manifold.hpp"

#include <cstdio>
#include <fstream>

namespace mda {

namespace {

struct Preshape {
  Vector flat;  // x0, y0, x1, y1, ...
  Eigen::RowVector2d centroid;
  double scale;
};

Preshape to_preshape(const Matrix& landmarks) {
  Preshape out;
  out.centroid = landmarks.colwise().mean();
  const Matrix centered = landmarks.rowwise() - out.centroid;
  out.scale = centered.norm();
  if (!(out.scale > 1e-12)) throw std::invalid_argument("shape_geodesic: degenerate shape");
  out.flat.resize(2 * landmarks.rows());
  for (Eigen::Index i = 0; i < landmarks.rows(); ++i) {
    out.flat(2 * i) = centered(i, 0) / out.scale;
    out.flat(2 * i + 1) = centered(i, 1) / out.scale;
  }
  return out;
}

Matrix unflatten(const Vector& flat) {
  Matrix out(flat.size() / 2, 2);
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    out(i, 0) = flat(2 * i);
    out(i, 1) = flat(2 * i + 1);
  }
  return out;
}

void write_row(std::ostream& out, const char* curve, double t, const double* values,
               Eigen::Index count) {
  char buf[64];
  out << curve;
  std::snprintf(buf, sizeof(buf), "%.17g", t);
  out << ',' << buf;
  for (Eigen::Index i = 0; i < count; ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", values[i]);
    out << ',' << buf;
  }
  out << '\n';
}

void write_header(std::ostream& out, Eigen::Index coords) {
  out << "curve,t";
  for (Eigen::Index i = 0; i < coords; ++i) out << ",c" << i;
  out << '\n';
}

constexpr Eigen::Index kDemoLandmarks = 64;

}  // namespace

std::vector<Eigen::Index> contour_order(const Matrix& landmarks) {
  if (landmarks.cols() != 2 || landmarks.rows() < 1) {
    throw std::invalid_argument("contour_order: expected N x 2 landmarks");
  }
  const Eigen::RowVector2d centroid = landmarks.colwise().mean();
  const Matrix centered = landmarks.rowwise() - centroid;
  const Eigen::Index n = landmarks.rows();
  std::vector<double> angle(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    angle[static_cast<std::size_t>(i)] = std::atan2(centered(i, 1), centered(i, 0));
  }

  // Rightmost point; ties on x go to the one closest to the +x direction.
  const double max_x = centered.col(0).maxCoeff();
  const double tol = 1e-12 * std::max(1.0, std::abs(max_x));
  Eigen::Index start = -1;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (centered(i, 0) < max_x - tol) continue;
    if (start < 0 || std::abs(angle[static_cast<std::size_t>(i)]) <
                         std::abs(angle[static_cast<std::size_t>(start)])) {
      start = i;
    }
  }

  const double two_pi = 2.0 * std::numbers::pi;
  const double origin = angle[static_cast<std::size_t>(start)];
  std::vector<double> sweep(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    double a = std::fmod(angle[static_cast<std::size_t>(i)] - origin, two_pi);
    if (a < 0) a += two_pi;
    sweep[static_cast<std::size_t>(i)] = i == start ? 0.0 : a;
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    if (a == start || b == start) return a == start && b != start;
    const double sa = sweep[static_cast<std::size_t>(a)];
    const double sb = sweep[static_cast<std::size_t>(b)];
    if (sa != sb) return sa < sb;
    return centered.row(a).squaredNorm() < centered.row(b).squaredNorm();
  });
  return order;
}

Matrix square_landmarks(Eigen::Index count) {
  if (count < 4) throw std::invalid_argument("square_landmarks: need at least 4 points");
  // Perimeter walk from (1, 0): up 1, left 2, down 2, right 2, up 1.
  Matrix out(count, 2);
  for (Eigen::Index i = 0; i < count; ++i) {
    const double s = 8.0 * static_cast<double>(i) / static_cast<double>(count);
    double x, y;
    if (s < 1.0) {
      x = 1.0, y = s;
    } else if (s < 3.0) {
      x = 1.0 - (s - 1.0), y = 1.0;
    } else if (s < 5.0) {
      x = -1.0, y = 1.0 - (s - 3.0);
    } else if (s < 7.0) {
      x = -1.0 + (s - 5.0), y = -1.0;
    } else {
      x = 1.0, y = -1.0 + (s - 7.0);
    }
    out(i, 0) = x;
    out(i, 1) = y;
  }
  return out;
}

Matrix circle_landmarks(Eigen::Index count) {
  if (count < 3) throw std::invalid_argument("circle_landmarks: need at least 3 points");
  Matrix out(count, 2);
  for (Eigen::Index i = 0; i < count; ++i) {
    const double a = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(count);
    out(i, 0) = std::cos(a);
    out(i, 1) = std::sin(a);
  }
  return out;
}

ShapeGeodesic::ShapeGeodesic(const Matrix& source, const Matrix& target) {
  if (source.cols() != 2 || target.cols() != 2) {
    throw std::invalid_argument("shape_geodesic: landmarks must be N x 2");
  }
  if (source.rows() != target.rows()) {
    throw std::invalid_argument("shape_geodesic: landmark count mismatch");
  }
  const auto src_order = contour_order(source);
  const auto tgt_order = contour_order(target);
  matched_target_.resize(target.rows(), 2);
  for (std::size_t r = 0; r < src_order.size(); ++r) {
    matched_target_.row(src_order[r]) = target.row(tgt_order[r]);
  }
  const Preshape s = to_preshape(source);
  const Preshape t = to_preshape(matched_target_);
  source_pre_ = s.flat;
  target_pre_ = t.flat;
  source_centroid_ = s.centroid;
  target_centroid_ = t.centroid;
  source_scale_ = s.scale;
  target_scale_ = t.scale;
}

Matrix ShapeGeodesic::preshape_at(double t) const {
  return unflatten(sphere_geodesic(source_pre_, target_pre_, t));
}

Matrix ShapeGeodesic::rescale(const Vector& flat, double t) const {
  const double scale = (1.0 - t) * source_scale_ + t * target_scale_;
  const Eigen::RowVector2d centroid = (1.0 - t) * source_centroid_ + t * target_centroid_;
  Matrix out = unflatten(flat) * scale;
  out.rowwise() += centroid;
  return out;
}

Matrix ShapeGeodesic::at(double t) const {
  return rescale(sphere_geodesic(source_pre_, target_pre_, t), t);
}

Matrix ShapeGeodesic::naive_at(double t) const {
  return rescale(sphere_chord(source_pre_, target_pre_, t), t);
}

Matrix shape_geodesic(const Matrix& source, const Matrix& target, double t) {
  return ShapeGeodesic(source, target).at(t);
}

DemoKind parse_demo_kind(const std::string& name) {
  if (name == "sphere") return DemoKind::sphere;
  if (name == "shape") return DemoKind::shape;
  throw std::invalid_argument("unknown demo kind '" + name + "'");
}

std::vector<double> demo_grid(DemoKind kind, int steps) {
  if (steps < 2) throw std::invalid_argument("demo: steps must be >= 2");
  std::vector<double> grid;
  for (int i = 0; i < steps; ++i) grid.push_back(static_cast<double>(i) / (steps - 1));
  if (kind == DemoKind::shape) {
    for (double t : {0.0, 0.05, 0.5, 0.95, 1.0}) grid.push_back(t);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  }
  return grid;
}

void demo_emit(DemoKind kind, int steps, const std::filesystem::path& out_path) {
  const auto grid = demo_grid(kind, steps);
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write " + out_path.string());

  if (kind == DemoKind::sphere) {
    const Vector p1 = Eigen::Vector3d(1.0, 0.0, 0.0);
    const Vector p2 = Eigen::Vector3d(0.0, 0.6, 0.8);
    write_header(out, 3);
    for (double t : grid) {
      const Vector g = sphere_geodesic(p1, p2, t);
      write_row(out, "geodesic", t, g.data(), g.size());
    }
    for (double t : grid) {
      const Vector g = sphere_chord(p1, p2, t);
      write_row(out, "naive", t, g.data(), g.size());
    }
  } else {
    const ShapeGeodesic path(square_landmarks(kDemoLandmarks), circle_landmarks(kDemoLandmarks));
    write_header(out, 2 * kDemoLandmarks);
    const auto emit = [&](const char* curve, const Matrix& shape, double t) {
      const Matrix row_major = shape.transpose();  // column-major storage gives x0, y0, x1, ...
      write_row(out, curve, t, row_major.data(), row_major.size());
    };
    for (double t : grid) emit("geodesic", path.at(t), t);
    for (double t : grid) emit("naive", path.naive_at(t), t);
  }
  if (!out) throw std::runtime_error("write failed: " + out_path.string());
}

}  // namespace mda
