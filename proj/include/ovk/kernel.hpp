#pragma once

#include <cmath>
#include <string>
#include <string_view>

#include <Eigen/Core>

#include "ovk/errors.hpp"

namespace ovk {

enum class KernelFamily { Gaussian, Matern32, Matern52 };

inline std::string_view to_string(KernelFamily f) {
  switch (f) {
    case KernelFamily::Gaussian: return "gaussian";
    case KernelFamily::Matern32: return "matern32";
    case KernelFamily::Matern52: return "matern52";
  }
  return "unknown";
}

inline KernelFamily parse_kernel_family(std::string_view name) {
  if (name == "gaussian") return KernelFamily::Gaussian;
  if (name == "matern32") return KernelFamily::Matern32;
  if (name == "matern52") return KernelFamily::Matern52;
  throw InputError("unknown kernel family '" + std::string(name) + "'");
}

/// A point (x, t) of the space-time domain.
template <typename Scalar>
struct SpatioTemporalPoint {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x;
  Scalar t = Scalar(0);
};

/// Stationary unit-variance kernel k(a, b) = phi(|a - b| / sigma).
///
/// The Gaussian member uses exp(-r^2 / sigma^2) (no factor two); the Matern
/// members are the usual half-integer closed forms with length-scale sigma.
/// Derivatives in the time arguments are only available for the Gaussian.
template <typename Scalar>
class ScalarKernel {
 public:
  ScalarKernel(KernelFamily family, Scalar bandwidth) : family_(family), bandwidth_(bandwidth) {
    if (!(bandwidth > Scalar(0)) || !std::isfinite(bandwidth)) {
      throw InputError("kernel bandwidth must be positive and finite");
    }
  }

  static ScalarKernel gaussian(Scalar bandwidth) { return {KernelFamily::Gaussian, bandwidth}; }

  KernelFamily family() const { return family_; }
  Scalar bandwidth() const { return bandwidth_; }
  bool differentiable() const { return family_ == KernelFamily::Gaussian; }

  /// k as a function of the squared distance.
  Scalar from_squared_distance(Scalar r2) const {
    using std::exp;
    using std::sqrt;
    const Scalar s = bandwidth_;
    switch (family_) {
      case KernelFamily::Gaussian:
        return exp(-r2 / (s * s));
      case KernelFamily::Matern32: {
        const Scalar u = sqrt(Scalar(3) * r2) / s;
        return (Scalar(1) + u) * exp(-u);
      }
      case KernelFamily::Matern52: {
        const Scalar u = sqrt(Scalar(5) * r2) / s;
        return (Scalar(1) + u + u * u / Scalar(3)) * exp(-u);
      }
    }
    return Scalar(0);
  }

  template <typename DerivedA, typename DerivedB>
  Scalar operator()(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) const {
    return from_squared_distance((a - b).squaredNorm());
  }

  Scalar operator()(Scalar a, Scalar b) const { return from_squared_distance((a - b) * (a - b)); }

  // Time derivatives, u = t - t'.

  /// d/dt k(t, t')
  Scalar d1(Scalar t, Scalar tp) const {
    require_differentiable();
    const Scalar u = t - tp, s2 = bandwidth_ * bandwidth_;
    return Scalar(-2) * u / s2 * std::exp(-u * u / s2);
  }

  /// d/dt d/dt' k(t, t') = (2/s^2 - 4u^2/s^4) exp(-u^2/s^2)
  Scalar d1d2(Scalar t, Scalar tp) const {
    require_differentiable();
    const Scalar u = t - tp, s2 = bandwidth_ * bandwidth_;
    return (Scalar(2) / s2 - Scalar(4) * u * u / (s2 * s2)) * std::exp(-u * u / s2);
  }

  /// d/dt of d1d2: (-12u/s^4 + 8u^3/s^6) exp(-u^2/s^2)
  Scalar d1d1d2(Scalar t, Scalar tp) const {
    require_differentiable();
    const Scalar u = t - tp, s2 = bandwidth_ * bandwidth_;
    return (Scalar(-12) * u / (s2 * s2) + Scalar(8) * u * u * u / (s2 * s2 * s2)) *
           std::exp(-u * u / s2);
  }

 private:
  void require_differentiable() const {
    if (!differentiable()) {
      throw UnsupportedError("time-derivative kernels are only implemented for the gaussian family, got " +
                             std::string(to_string(family_)));
    }
  }

  KernelFamily family_;
  Scalar bandwidth_;
};

/// Separable operator-valued kernel
///   K((x,t),(x',t')) = k_x(x,x') [k_t(t,t') + alpha d_t d_t' k_t(t,t')] I_d.
///
/// alpha = 0 is the plain separable kernel. Every block is a multiple of the
/// identity, so evaluation is carried out on the scalar factor.
template <typename Scalar>
class TimeRegularizedKernel {
 public:
  TimeRegularizedKernel(ScalarKernel<Scalar> spatial, ScalarKernel<Scalar> temporal, Scalar alpha,
                        int output_dim)
      : spatial_(spatial), temporal_(temporal), alpha_(alpha), output_dim_(output_dim) {
    if (!(alpha >= Scalar(0)) || !std::isfinite(alpha)) throw InputError("alpha must be nonnegative");
    if (output_dim < 1) throw InputError("output_dim must be at least 1");
    if (alpha > Scalar(0) && !temporal.differentiable()) {
      throw UnsupportedError("alpha > 0 requires a gaussian temporal kernel");
    }
  }

  const ScalarKernel<Scalar>& spatial() const { return spatial_; }
  const ScalarKernel<Scalar>& temporal() const { return temporal_; }
  Scalar alpha() const { return alpha_; }
  int output_dim() const { return output_dim_; }

  /// Scalar factor of the d x d block.
  template <typename DerivedA, typename DerivedB>
  Scalar factor(const Eigen::MatrixBase<DerivedA>& x, Scalar t, const Eigen::MatrixBase<DerivedB>& xp,
                Scalar tp) const {
    const Scalar kx = spatial_(x, xp);
    Scalar kt = temporal_(t, tp);
    if (alpha_ > Scalar(0)) kt += alpha_ * temporal_.d1d2(t, tp);
    return kx * kt;
  }

  /// Scalar factor of d/dt K((x,t),(x',t')), derivative in the first time argument.
  template <typename DerivedA, typename DerivedB>
  Scalar dt_factor(const Eigen::MatrixBase<DerivedA>& x, Scalar t, const Eigen::MatrixBase<DerivedB>& xp,
                   Scalar tp) const {
    const Scalar kx = spatial_(x, xp);
    Scalar dkt = temporal_.d1(t, tp);
    if (alpha_ > Scalar(0)) dkt += alpha_ * temporal_.d1d1d2(t, tp);
    return kx * dkt;
  }

 private:
  ScalarKernel<Scalar> spatial_;
  ScalarKernel<Scalar> temporal_;
  Scalar alpha_;
  int output_dim_;
};

template <typename Scalar, typename DerivedA, typename DerivedB>
Scalar eval_scalar(const ScalarKernel<Scalar>& k, const Eigen::MatrixBase<DerivedA>& a,
                   const Eigen::MatrixBase<DerivedB>& b) {
  if (a.size() != b.size()) throw InputError("kernel arguments differ in dimension");
  return k(a, b);
}

template <typename Scalar>
Scalar eval_dt_dt_scalar(const ScalarKernel<Scalar>& k, Scalar t, Scalar tp) {
  return k.d1d2(t, tp);
}

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> eval_ov(const TimeRegularizedKernel<Scalar>& K,
                                                              const SpatioTemporalPoint<Scalar>& p,
                                                              const SpatioTemporalPoint<Scalar>& q) {
  if (p.x.size() != q.x.size()) throw InputError("points differ in spatial dimension");
  const int d = K.output_dim();
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  return K.factor(p.x, p.t, q.x, q.t) * Mat::Identity(d, d);
}

using Kernel = ScalarKernel<double>;
using OvKernel = TimeRegularizedKernel<double>;
using Point = SpatioTemporalPoint<double>;

}  // namespace ovk
