#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ovk/kernel.hpp"

namespace ovk {

/// Axis-aligned box [lower, upper] in R^D.
struct Box {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  Box() = default;
  Box(Eigen::VectorXd lo, Eigen::VectorXd hi);
  static Box interval(double lo, double hi);
  static Box square(double lo, double hi, int dim);

  int dim() const { return static_cast<int>(lower.size()); }
  double volume() const;
  bool contains(const Eigen::Ref<const Eigen::VectorXd>& p, double tol = 0.0) const;
};

enum class SamplingKind { Grid, UniformRandom };

/// Whether the last coordinate of a point set is time.
enum class TimeAxis { None, Last };

/// An ordered set of points, one row of `coords` per point.
///
/// With TimeAxis::Last the final column is the time coordinate and the rest is
/// the spatial part; with TimeAxis::None every column is spatial and t = 0.
class PointSet {
 public:
  PointSet() = default;
  PointSet(Eigen::MatrixXd coords, Box domain, TimeAxis time_axis = TimeAxis::None,
           SamplingKind kind = SamplingKind::Grid, std::uint64_t seed = 0);

  Eigen::Index size() const { return coords_.rows(); }
  bool empty() const { return coords_.rows() == 0; }
  int dim() const { return static_cast<int>(coords_.cols()); }
  int spatial_dim() const { return time_axis_ == TimeAxis::Last ? dim() - 1 : dim(); }
  TimeAxis time_axis() const { return time_axis_; }
  SamplingKind kind() const { return kind_; }
  std::uint64_t seed() const { return seed_; }
  const Box& domain() const { return domain_; }
  const Eigen::MatrixXd& coords() const { return coords_; }

  auto spatial() const { return coords_.leftCols(spatial_dim()); }
  auto x(Eigen::Index i) const { return coords_.row(i).head(spatial_dim()); }
  double t(Eigen::Index i) const { return time_axis_ == TimeAxis::Last ? coords_(i, dim() - 1) : 0.0; }
  Point point(Eigen::Index i) const;

  /// Smallest pairwise Euclidean distance; +inf for fewer than two points.
  double min_separation() const;

  /// New set with one extra point appended (domain and kind kept).
  PointSet with_point(const Eigen::Ref<const Eigen::VectorXd>& p) const;

 private:
  Eigen::MatrixXd coords_;
  Box domain_;
  TimeAxis time_axis_ = TimeAxis::None;
  SamplingKind kind_ = SamplingKind::Grid;
  std::uint64_t seed_ = 0;
};

/// Endpoint-inclusive tensor grid; the first axis varies slowest.
PointSet grid_points(const Box& domain, const std::vector<int>& counts_per_axis,
                     TimeAxis time_axis = TimeAxis::None);

/// n i.i.d. uniform points in the box, reproducible from `seed`.
PointSet random_points(const Box& domain, int n, std::uint64_t seed, TimeAxis time_axis = TimeAxis::None);

/// max over a probe grid (probe_resolution nodes per axis) of the distance to
/// the nearest point of `ps`. Probes cover ps.domain().
double fill_distance(const PointSet& ps, int probe_resolution);

/// Default probe resolution: 2048 in 1D, 256 per axis otherwise.
int default_probe_resolution(int dim);

void write_csv(std::ostream& os, const PointSet& ps);
void write_csv(const std::string& path, const PointSet& ps);

}  // namespace ovk
