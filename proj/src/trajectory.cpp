#include "transgen/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "transgen/error.hpp"

namespace transgen::trajectory {

ControlPoints sample_control_points(Rng& rng, const geometry::Aabb3& region) {
  const Vec3 e = region.extent();
  if (!(e.x() > 0.0 && e.y() > 0.0 && e.z() > 0.0)) {
    throw InputError("trajectory safe region has zero volume");
  }
  ControlPoints pts;
  for (auto& p : pts) {
    for (int a = 0; a < 3; ++a) p[a] = rng.uniform(region.lo[a], region.hi[a]);
  }
  return pts;
}

Spline::Spline(const ControlPoints& p) : points_(p) {
  tangents_[0] = p[1] - p[0];
  tangents_[1] = 0.5 * (p[2] - p[0]);
  tangents_[2] = 0.5 * (p[3] - p[1]);
  tangents_[3] = p[3] - p[2];
}

void Spline::locate(double t, int& segment, double& u) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw InputError("spline parameter " + std::to_string(t) + " outside [0, 1]");
  }
  const double x = 3.0 * t;
  segment = std::min(2, static_cast<int>(x));
  u = x - segment;
}

Vec3 Spline::eval(double t) const {
  int i;
  double u;
  locate(t, i, u);
  const double u2 = u * u;
  const double u3 = u2 * u;
  const double h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
  const double h10 = u3 - 2.0 * u2 + u;
  const double h01 = -2.0 * u3 + 3.0 * u2;
  const double h11 = u3 - u2;
  return h00 * points_[i] + h10 * tangents_[i] + h01 * points_[i + 1] + h11 * tangents_[i + 1];
}

Vec3 Spline::derivative(double t) const {
  int i;
  double u;
  locate(t, i, u);
  const double u2 = u * u;
  const double d00 = 6.0 * u2 - 6.0 * u;
  const double d10 = 3.0 * u2 - 4.0 * u + 1.0;
  const double d01 = -6.0 * u2 + 6.0 * u;
  const double d11 = 3.0 * u2 - 2.0 * u;
  return 3.0 * (d00 * points_[i] + d10 * tangents_[i] + d01 * points_[i + 1] +
                d11 * tangents_[i + 1]);
}

namespace {

// Five-point Gauss-Legendre estimate of the arc length over [a, b].
double gauss_length(const Spline& spline, double a, double b) {
  static constexpr double kX[3] = {0.0, 0.5384693101056830910, 0.9061798459386639928};
  static constexpr double kW[3] = {0.5688888888888888889, 0.4786286704993664680,
                                   0.2369268850561890875};
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double sum = kW[0] * spline.derivative(mid).norm();
  for (int i = 1; i < 3; ++i) {
    sum += kW[i] * (spline.derivative(mid - half * kX[i]).norm() +
                    spline.derivative(mid + half * kX[i]).norm());
  }
  return half * sum;
}

}  // namespace

ArcLengthTable::ArcLengthTable(const Spline& spline, double tol) : spline_(spline) {
  t_.push_back(0.0);
  s_.push_back(0.0);
  // Knots first: the speed is smooth inside each cubic piece.
  const double knots[4] = {0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0};
  for (int k = 0; k < 3; ++k) {
    subdivide(knots[k], knots[k + 1], gauss_length(spline_, knots[k], knots[k + 1]), tol, 0);
  }
}

void ArcLengthTable::subdivide(double t0, double t1, double whole, double tol, int depth) {
  constexpr int kMinDepth = 2;
  constexpr int kMaxDepth = 30;
  const double tm = 0.5 * (t0 + t1);
  const double left = gauss_length(spline_, t0, tm);
  const double right = gauss_length(spline_, tm, t1);
  const bool converged = std::abs(left + right - whole) <= tol * (left + right);
  if (depth >= kMaxDepth || (depth >= kMinDepth && converged)) {
    t_.push_back(tm);
    s_.push_back(s_.back() + left);
    t_.push_back(t1);
    s_.push_back(s_.back() + right);
    return;
  }
  subdivide(t0, tm, left, tol, depth + 1);
  subdivide(tm, t1, right, tol, depth + 1);
}

std::size_t ArcLengthTable::interval(const std::vector<double>& keys, double v) const {
  const auto it = std::upper_bound(keys.begin(), keys.end(), v);
  const auto hi = static_cast<std::size_t>(it - keys.begin());
  return std::min(hi, keys.size() - 1) - 1;
}

double ArcLengthTable::length_at(double t) const {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return s_.back();
  const std::size_t i = interval(t_, t);
  return s_[i] + gauss_length(spline_, t_[i], t);
}

double ArcLengthTable::param_at(double s) const {
  if (s <= 0.0) return 0.0;
  if (s >= s_.back()) return 1.0;
  const std::size_t i = interval(s_, s);
  double lo = t_[i];
  double hi = t_[i + 1];
  const double span = s_[i + 1] - s_[i];
  double t = span > 0.0 ? lo + (s - s_[i]) / span * (hi - lo) : lo;
  // Newton on s_i + L(t_i, t) = s, falling back to bisection when a step
  // leaves the bracket.
  for (int it = 0; it < 60; ++it) {
    const double f = s_[i] + gauss_length(spline_, t_[i], t) - s;
    if (std::abs(f) <= 1e-15 * s_.back()) break;
    (f < 0.0 ? lo : hi) = t;
    const double speed = spline_.derivative(t).norm();
    double next = speed > 0.0 ? t - f / speed : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == t) break;
    t = next;
  }
  return t;
}

std::vector<double> constant_speed_params(const Spline& spline, int n_frames) {
  if (n_frames < 2) throw InputError("constant-speed track needs at least 2 frames");
  const ArcLengthTable table(spline);
  const double length = table.total_length();
  std::vector<double> t(static_cast<std::size_t>(n_frames));
  t.front() = 0.0;
  t.back() = 1.0;
  for (int k = 1; k + 1 < n_frames; ++k) {
    t[static_cast<std::size_t>(k)] = table.param_at(length * k / (n_frames - 1));
  }
  return t;
}

std::vector<Vec3> constant_speed_track(const Spline& spline, int n_frames) {
  std::vector<Vec3> out;
  for (double t : constant_speed_params(spline, n_frames)) out.push_back(spline.eval(t));
  return out;
}

namespace {

void check_axis(const Vec3& axis) {
  if (!(std::abs(axis.norm() - 1.0) <= 1e-9)) {
    throw InputError("rotation axis must be a unit vector");
  }
}

}  // namespace

Quat orientation_at(const Vec3& axis, double speed, double frame_time, const Quat& initial) {
  check_axis(axis);
  return Quat(Eigen::AngleAxisd(deg_to_rad(speed * frame_time), axis)) * initial;
}

std::vector<Quat> orientation_track(const Vec3& axis, double speed, int n_frames,
                                    const Quat& initial) {
  check_axis(axis);
  std::vector<Quat> out;
  out.reserve(static_cast<std::size_t>(std::max(n_frames, 0)));
  for (int k = 0; k < n_frames; ++k) out.push_back(orientation_at(axis, speed, k, initial));
  return out;
}

MotionPath::MotionPath(const ControlPoints& points, int n_frames, double lag_fraction,
                       const Vec3& offset)
    : spline_(points), table_(spline_), n_frames_(n_frames), offset_(offset) {
  if (n_frames < 2) throw InputError("motion path needs at least 2 frames");
  params_ = constant_speed_params(spline_, n_frames);
  for (double t : params_) stations_.push_back(table_.length_at(t));
  lag_ = lag_fraction * table_.total_length();
}

Vec3 MotionPath::position(double frame_time) const {
  const double ft = std::clamp(frame_time, 0.0, static_cast<double>(n_frames_ - 1));
  auto k = std::min(static_cast<std::size_t>(ft), params_.size() - 2);
  double f = ft - static_cast<double>(k);
  if (f == 1.0) {
    ++k;
    f = 0.0;
  }
  // Integer frames of an unlagged path reproduce constant_speed_track exactly.
  if (f == 0.0 && lag_ == 0.0) return spline_.eval(params_[k]) + offset_;
  const double s = stations_[k] + f * (stations_[k + 1 < stations_.size() ? k + 1 : k] - stations_[k]) - lag_;
  if (s <= 0.0) return spline_.eval(0.0) + offset_;
  if (s >= table_.total_length()) return spline_.eval(1.0) + offset_;
  return spline_.eval(table_.param_at(s)) + offset_;
}

}  // namespace transgen::trajectory
