#include "ovk/geometry.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include "ovk/csv.hpp"
#include "ovk/errors.hpp"

namespace ovk {

Box::Box(Eigen::VectorXd lo, Eigen::VectorXd hi) : lower(std::move(lo)), upper(std::move(hi)) {
  if (lower.size() != upper.size() || lower.size() == 0) throw InputError("box bounds must be nonempty and equal length");
  if (!lower.allFinite() || !upper.allFinite()) throw InputError("box bounds must be finite");
  if ((upper.array() < lower.array()).any()) throw InputError("box upper bound below lower bound");
}

Box Box::interval(double lo, double hi) {
  return {Eigen::VectorXd::Constant(1, lo), Eigen::VectorXd::Constant(1, hi)};
}

Box Box::square(double lo, double hi, int dim) {
  return {Eigen::VectorXd::Constant(dim, lo), Eigen::VectorXd::Constant(dim, hi)};
}

double Box::volume() const { return (upper - lower).prod(); }

bool Box::contains(const Eigen::Ref<const Eigen::VectorXd>& p, double tol) const {
  if (p.size() != lower.size()) return false;
  return ((p.array() >= lower.array() - tol) && (p.array() <= upper.array() + tol)).all();
}

PointSet::PointSet(Eigen::MatrixXd coords, Box domain, TimeAxis time_axis, SamplingKind kind, std::uint64_t seed)
    : coords_(std::move(coords)), domain_(std::move(domain)), time_axis_(time_axis), kind_(kind), seed_(seed) {
  if (coords_.rows() > 0 && coords_.cols() != domain_.dim()) {
    throw InputError("point dimension does not match domain dimension");
  }
  if (time_axis_ == TimeAxis::Last && domain_.dim() < 2) {
    throw InputError("a timed point set needs at least one spatial axis");
  }
  if (!coords_.allFinite()) throw InputError("point coordinates must be finite");
  for (Eigen::Index i = 0; i < coords_.rows(); ++i) {
    if (!domain_.contains(coords_.row(i).transpose(), 1e-12)) throw InputError("point lies outside its domain");
  }
}

Point PointSet::point(Eigen::Index i) const { return Point{x(i).transpose(), t(i)}; }

double PointSet::min_separation() const {
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < size(); ++i) {
    for (Eigen::Index j = i + 1; j < size(); ++j) {
      best = std::min(best, (coords_.row(i) - coords_.row(j)).squaredNorm());
    }
  }
  return std::sqrt(best);
}

PointSet PointSet::with_point(const Eigen::Ref<const Eigen::VectorXd>& p) const {
  Eigen::MatrixXd c(size() + 1, dim());
  c.topRows(size()) = coords_;
  c.row(size()) = p.transpose();
  return {std::move(c), domain_, time_axis_, kind_, seed_};
}

PointSet grid_points(const Box& domain, const std::vector<int>& counts_per_axis, TimeAxis time_axis) {
  const int D = domain.dim();
  if (static_cast<int>(counts_per_axis.size()) != D) throw InputError("one grid count per axis is required");
  Eigen::Index total = 1;
  for (int c : counts_per_axis) {
    if (c < 2) throw InputError("grid counts must be at least 2 per axis");
    total *= c;
  }
  std::vector<Eigen::VectorXd> axes;
  for (int a = 0; a < D; ++a) {
    axes.push_back(Eigen::VectorXd::LinSpaced(counts_per_axis[a], domain.lower(a), domain.upper(a)));
    // LinSpaced can miss the endpoint by an ulp
    axes.back()(counts_per_axis[a] - 1) = domain.upper(a);
  }
  Eigen::MatrixXd coords(total, D);
  std::vector<int> idx(D, 0);
  for (Eigen::Index r = 0; r < total; ++r) {
    for (int a = 0; a < D; ++a) coords(r, a) = axes[a](idx[a]);
    for (int a = D - 1; a >= 0; --a) {
      if (++idx[a] < counts_per_axis[a]) break;
      idx[a] = 0;
    }
  }
  return {std::move(coords), domain, time_axis, SamplingKind::Grid, 0};
}

PointSet random_points(const Box& domain, int n, std::uint64_t seed, TimeAxis time_axis) {
  if (n < 1) throw InputError("random_points needs n >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::MatrixXd coords(n, domain.dim());
  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < domain.dim(); ++a) {
      coords(i, a) = domain.lower(a) + unit(rng) * (domain.upper(a) - domain.lower(a));
    }
  }
  return {std::move(coords), domain, time_axis, SamplingKind::UniformRandom, seed};
}

int default_probe_resolution(int dim) { return dim == 1 ? 2048 : 256; }

double fill_distance(const PointSet& ps, int probe_resolution) {
  if (ps.empty()) throw InputError("fill distance of an empty point set");
  if (probe_resolution < 10) throw InputError("probe resolution must be at least 10 per axis");
  const Box& box = ps.domain();
  const int D = box.dim();
  const Eigen::MatrixXd& pts = ps.coords();
  Eigen::VectorXd step = (box.upper - box.lower) / double(probe_resolution - 1);

  std::vector<int> idx(D, 0);
  Eigen::RowVectorXd probe(D);
  double worst = 0.0;
  while (true) {
    for (int a = 0; a < D; ++a) probe(a) = box.lower(a) + idx[a] * step(a);
    const double nearest = (pts.rowwise() - probe).rowwise().squaredNorm().minCoeff();
    worst = std::max(worst, nearest);
    int a = D - 1;
    for (; a >= 0; --a) {
      if (++idx[a] < probe_resolution) break;
      idx[a] = 0;
    }
    if (a < 0) break;
  }
  return std::sqrt(worst);
}

void write_csv(std::ostream& os, const PointSet& ps) {
  std::vector<std::string> names;
  for (int a = 0; a < ps.spatial_dim(); ++a) names.push_back("x" + std::to_string(a + 1));
  if (ps.time_axis() == TimeAxis::Last) names.emplace_back("t");
  csv::write_header(os, names);
  for (Eigen::Index i = 0; i < ps.size(); ++i) {
    const Eigen::RowVectorXd r = ps.coords().row(i);
    csv::write_row(os, std::vector<double>(r.data(), r.data() + r.size()));
  }
}

void write_csv(const std::string& path, const PointSet& ps) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  write_csv(out, ps);
}

}  // namespace ovk
