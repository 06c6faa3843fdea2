#pragma once

#include <array>
#include <vector>

#include "transgen/geometry.hpp"
#include "transgen/math.hpp"
#include "transgen/rng.hpp"

namespace transgen::trajectory {

using ControlPoints = std::array<Vec3, 4>;

// Four points drawn i.i.d. uniform in the region. Throws InputError for a
// region with zero (or negative) volume.
ControlPoints sample_control_points(Rng& rng, const geometry::Aabb3& region);

// Cubic Hermite spline through four points with uniform knots at t = 0, 1/3,
// 2/3, 1. Interior tangents are Catmull-Rom, end tangents one-sided
// differences; tangents are per unit of segment parameter.
class Spline {
 public:
  explicit Spline(const ControlPoints& points);

  // Throws InputError for t outside [0, 1].
  Vec3 eval(double t) const;
  Vec3 derivative(double t) const;  // d/dt over the global parameter

  const ControlPoints& points() const { return points_; }
  const ControlPoints& tangents() const { return tangents_; }

 private:
  static void locate(double t, int& segment, double& u);

  ControlPoints points_;
  ControlPoints tangents_;
};

// Arc-length parameterization. Node lengths come from adaptive
// Gauss-Legendre quadrature of the spline speed; lookups between nodes
// integrate exactly and invert with a bracketed Newton iteration, so
// param_at and length_at are inverse to near machine precision.
class ArcLengthTable {
 public:
  static constexpr double kDefaultTolerance = 1e-12;

  explicit ArcLengthTable(const Spline& spline, double relative_tolerance = kDefaultTolerance);

  double total_length() const { return s_.back(); }
  // Spline parameter at arc length s (clamped to [0, total_length]).
  double param_at(double s) const;
  // Arc length from t = 0 (clamped to [0, 1]).
  double length_at(double t) const;
  std::size_t size() const { return t_.size(); }

 private:
  void subdivide(double t0, double t1, double whole, double tol, int depth);
  std::size_t interval(const std::vector<double>& keys, double v) const;

  Spline spline_;
  std::vector<double> t_;
  std::vector<double> s_;
};

// Spline parameters at equal arc-length increments, first 0 and last 1.
// Throws InputError when n_frames < 2.
std::vector<double> constant_speed_params(const Spline& spline, int n_frames);

// Positions at those parameters; first = point 0, last = point 3 exactly.
// Throws InputError when n_frames < 2.
std::vector<Vec3> constant_speed_track(const Spline& spline, int n_frames);

// Orientation k = rotation of k * speed degrees about axis, applied after
// the initial orientation. Throws InputError for a non-unit axis.
std::vector<Quat> orientation_track(const Vec3& axis, double speed_deg_per_frame, int n_frames,
                                    const Quat& initial);

// Same rule at a fractional frame time.
Quat orientation_at(const Vec3& axis, double speed_deg_per_frame, double frame_time,
                    const Quat& initial);

struct PoseTrack {
  std::vector<Vec3> positions;
  std::vector<Quat> orientations;
};

// Constant-speed motion evaluable at fractional frame times (for shutter
// sampling); between frames the arc position is interpolated linearly. A
// follower path trails the leader by a fixed arc-length lag and is
// displaced by a constant world offset; times outside the frame range clamp.
class MotionPath {
 public:
  MotionPath(const ControlPoints& points, int n_frames, double lag_fraction = 0.0,
             const Vec3& offset = Vec3::Zero());

  Vec3 position(double frame_time) const;
  double total_length() const { return table_.total_length(); }
  int n_frames() const { return n_frames_; }
  const Spline& spline() const { return spline_; }

 private:
  Spline spline_;
  ArcLengthTable table_;
  std::vector<double> params_;
  std::vector<double> stations_;  // arc length at each frame
  int n_frames_;
  double lag_;
  Vec3 offset_;
};

}  // namespace transgen::trajectory
