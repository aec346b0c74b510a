#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "vosteer/errors.hpp"
#include "vosteer/observation.hpp"

namespace oracle {

using vosteer::geometry::PlanarPose;
using vosteer::trajectory::RouteMatch;
using vosteer::trajectory::Trajectory;

Vec2 rotate_matrix(double angle, Vec2 v) {
  const double m00 = std::cos(angle), m01 = -std::sin(angle);
  const double m10 = std::sin(angle), m11 = std::cos(angle);
  return {m00 * v.x + m01 * v.y, m10 * v.x + m11 * v.y};
}

PlanarPose transform_pose(const PlanarPose& p, double angle, double tx, double ty) {
  const Vec2 r = rotate_matrix(angle, {p.x(), p.y()});
  return PlanarPose(r.x + tx, r.y + ty, p.heading() + angle);
}

std::array<double, 2> local_frame(Vec2 v_prev, Vec2 v_curr) {
  const double n = std::hypot(v_prev.x, v_prev.y);
  // Rows of the rotation taking v_prev onto +x are the unit forward and left axes.
  const double fx = v_prev.x / n, fy = v_prev.y / n;
  return {fx * v_curr.x + fy * v_curr.y, -fy * v_curr.x + fx * v_curr.y};
}

namespace {

std::vector<double> solve(std::vector<double> a, std::vector<double> b, int n) {
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r) {
      if (std::abs(a[r * n + col]) > std::abs(a[pivot * n + col])) pivot = r;
    }
    if (pivot != col) {
      for (int c = 0; c < n; ++c) std::swap(a[col * n + c], a[pivot * n + c]);
      std::swap(b[col], b[pivot]);
    }
    const double d = a[col * n + col];
    if (d == 0.0) throw std::runtime_error("oracle::solve: singular system");
    for (int r = col + 1; r < n; ++r) {
      const double f = a[r * n + col] / d;
      for (int c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (int r = n - 1; r >= 0; --r) {
    double acc = b[r];
    for (int c = r + 1; c < n; ++c) acc -= a[r * n + c] * x[c];
    x[r] = acc / a[r * n + r];
  }
  return x;
}

}  // namespace

Circle fit_circle(const std::vector<Vec2>& points) {
  // x^2 + y^2 + D x + E y + F = 0 in the least-squares sense. Centering first
  // keeps the normal equations well conditioned.
  double mx = 0.0, my = 0.0;
  for (const Vec2& p : points) {
    mx += p.x;
    my += p.y;
  }
  mx /= static_cast<double>(points.size());
  my /= static_cast<double>(points.size());
  std::vector<double> rows;
  std::vector<double> rhs;
  for (const Vec2& p : points) {
    const double x = p.x - mx, y = p.y - my;
    rows.insert(rows.end(), {x, y, 1.0});
    rhs.push_back(-(x * x + y * y));
  }
  const std::vector<double> w = least_squares(rows, static_cast<int>(points.size()), 3, rhs);
  const double cx = -w[0] / 2.0, cy = -w[1] / 2.0;
  return {cx + mx, cy + my, std::sqrt(cx * cx + cy * cy - w[2])};
}

std::vector<double> least_squares(const std::vector<double>& x, int rows, int cols, const std::vector<double>& y) {
  std::vector<double> ata(static_cast<std::size_t>(cols * cols), 0.0);
  std::vector<double> aty(static_cast<std::size_t>(cols), 0.0);
  for (int r = 0; r < rows; ++r) {
    for (int i = 0; i < cols; ++i) {
      aty[i] += x[r * cols + i] * y[r];
      for (int j = 0; j < cols; ++j) ata[i * cols + j] += x[r * cols + i] * x[r * cols + j];
    }
  }
  return solve(ata, aty, cols);
}

std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                     std::vector<double> p, double h) {
  std::vector<double> g(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double keep = p[i];
    p[i] = keep + h;
    const double up = f(p);
    p[i] = keep - h;
    const double down = f(p);
    p[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

long nearest_frame(const Trajectory& t, double x, double y, double radius) {
  long best = -1;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double dx = t[i].pose.x() - x;
    const double dy = t[i].pose.y() - y;
    const double d2 = dx * dx + dy * dy;
    if (d2 < best_d2) {
      best_d2 = d2;
      best = static_cast<long>(i);
    }
  }
  return best_d2 <= radius * radius ? best : -1;
}

double mean_abs_lateral(const Trajectory& query, const Trajectory& target, const RouteMatch& match) {
  double sum = 0.0;
  std::size_t matched = 0, missed = 0;
  for (const auto& f : query.frames()) {
    const long j = nearest_frame(target, f.pose.x(), f.pose.y(), match.threshold);
    if (j < 0) {
      ++missed;
      continue;
    }
    const Vec2 d{target[static_cast<std::size_t>(j)].pose.x() - f.pose.x(),
                 target[static_cast<std::size_t>(j)].pose.y() - f.pose.y()};
    sum += std::abs(rotate_matrix(-f.pose.heading(), d).y);
    ++matched;
  }
  if (static_cast<double>(missed) > match.violation_budget * static_cast<double>(query.size())) {
    throw vosteer::IncompatibleRoutes("oracle: route mismatch");
  }
  return matched == 0 ? 0.0 : sum / static_cast<double>(matched);
}

int select_reference(const std::vector<Trajectory>& trajs, const RouteMatch& match) {
  std::vector<double> sums(trajs.size(), 0.0);
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    for (std::size_t j = 0; j < trajs.size(); ++j) {
      if (i != j) sums[i] += mean_abs_lateral(trajs[i], trajs[j], match);
    }
  }
  const double lowest = *std::min_element(sums.begin(), sums.end());
  const double tol = 1e-12 * std::max(1.0, std::abs(lowest));
  int best = std::numeric_limits<int>::max();
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    if (sums[i] <= lowest + tol) best = std::min(best, trajs[i].id());
  }
  return best;
}

std::vector<std::pair<std::size_t, std::size_t>> pair_frames(const Trajectory& t, double dx, double tol) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t a = 0;
  while (a + 1 < t.size()) {
    // First later frame that reaches the lower band edge.
    std::size_t j = a + 1;
    while (j < t.size() && std::hypot(t[j].pose.x() - t[a].pose.x(), t[j].pose.y() - t[a].pose.y()) <
                               dx * (1.0 - tol)) {
      ++j;
    }
    if (j == t.size()) break;
    if (std::hypot(t[j].pose.x() - t[a].pose.x(), t[j].pose.y() - t[a].pose.y()) <= dx * (1.0 + tol)) {
      out.emplace_back(a, j);
    }
    a = j;
  }
  return out;
}

std::vector<Label> relabel(const Trajectory& traj, const Trajectory& reference, double dx_nominal, double tol,
                           double threshold) {
  const double lo = dx_nominal * (1.0 - tol);
  const double hi = dx_nominal * (1.0 + tol);
  std::vector<Label> out;
  for (const auto& [a, f] : oracle::pair_frames(traj, dx_nominal, tol)) {
    const PlanarPose& here = traj[f].pose;
    const long near = nearest_frame(reference, here.x(), here.y(), threshold);
    if (near < 0) continue;
    const Vec2 prev{here.x() - traj[a].pose.x(), here.y() - traj[a].pose.y()};
    const double n = std::hypot(prev.x, prev.y);
    const Vec2 fwd{prev.x / n, prev.y / n};
    for (std::size_t j = static_cast<std::size_t>(near); j < reference.size(); ++j) {
      const Vec2 d{reference[j].pose.x() - here.x(), reference[j].pose.y() - here.y()};
      const double ahead = d.x * fwd.x + d.y * fwd.y;
      if (ahead > 1.5 * dx_nominal) break;
      if (ahead < lo) continue;
      // Rotation for the label goes through the library primitive so the
      // output stays bit-compatible with the CSV writer; geometry has its own
      // matrix-oracle tests.
      const auto m = vosteer::geometry::local_motion({prev.x, prev.y}, {d.x, d.y});
      if (m.dx >= lo && m.dx <= hi) out.push_back({f, m.dx, m.dy});
      break;
    }
  }
  return out;
}

std::string label_csv(const std::vector<Trajectory>& trajs, const vosteer::course::Course& course, double dx_nominal,
                      double tol, double alpha, double threshold) {
  RouteMatch match;
  match.threshold = threshold;
  const int ref_id = oracle::select_reference(trajs, match);
  const Trajectory* ref = nullptr;
  for (const Trajectory& t : trajs) {
    if (t.id() == ref_id) ref = &t;
  }
  std::string out = "frame,traj_id,dx,dy,steer,command\n";
  for (const Trajectory& t : trajs) {
    for (const Label& l : oracle::relabel(t, *ref, dx_nominal, tol, threshold)) {
      const auto proj = course.project(t[l.frame].pose.x(), t[l.frame].pose.y());
      char line[192];
      std::snprintf(line, sizeof line, "%zu,%d,%.9g,%.9g,%.9g,%c\n", l.frame, t.id(), l.dx, l.dy,
                    std::atan(l.dy * alpha), vosteer::course::command_letter(course.command_at(proj.s)));
      out += line;
    }
  }
  return out;
}

}  // namespace oracle
