#include "fdpomm/model_core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fdpomm/error.hpp"

namespace fdpomm {

ParamPoint::ParamPoint(std::initializer_list<double> c)
    : coords(static_cast<Eigen::Index>(c.size())) {
  Eigen::Index i = 0;
  for (double v : c) coords(i++) = v;
}

bool ParamPoint::operator==(const ParamPoint& other) const {
  return coords.size() == other.coords.size() && coords == other.coords;
}

ParamSpace::ParamSpace(std::size_t dims)
    : lower_(Vec::Constant(static_cast<Eigen::Index>(dims),
                           -std::numeric_limits<double>::infinity())),
      upper_(Vec::Constant(static_cast<Eigen::Index>(dims),
                           std::numeric_limits<double>::infinity())) {
  if (dims == 0) throw Error(ErrorCode::kInvalidArgument, "parameter space needs dims >= 1");
}

ParamSpace::ParamSpace(Vec lower, Vec upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() == 0 || lower_.size() != upper_.size())
    throw Error(ErrorCode::kDimensionMismatch, "bounds of unequal length");
  for (Eigen::Index i = 0; i < lower_.size(); ++i)
    if (!(lower_(i) <= upper_(i)))
      throw Error(ErrorCode::kInvalidArgument, "lower bound exceeds upper bound");
}

bool ParamSpace::contains(const ParamPoint& p) const {
  if (p.coords.size() != lower_.size()) return false;
  for (Eigen::Index i = 0; i < lower_.size(); ++i) {
    const double v = p.coords(i);
    if (!std::isfinite(v) || v < lower_(i) || v > upper_(i)) return false;
  }
  return true;
}

double ParamSpace::distance(const ParamPoint& a, const ParamPoint& b) const {
  if (a.coords.size() != lower_.size() || b.coords.size() != lower_.size())
    throw Error(ErrorCode::kDimensionMismatch, "point dimension differs from space");
  return (a.coords - b.coords).norm();
}

double param_distance(const ParamSpace& space, const ParamPoint& a,
                      const ParamPoint& b) {
  return space.distance(a, b);
}

ObsSeq ObsSeq::prefix(std::size_t n) const {
  if (n > y.size()) throw Error(ErrorCode::kInvalidArgument, "prefix longer than sequence");
  ObsSeq out;
  out.y.assign(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n));
  return out;
}

ObsSeq ObsSeq::scalar(const std::vector<double>& values) {
  ObsSeq out;
  out.y.reserve(values.size());
  for (double v : values) out.y.push_back(Vec::Constant(1, v));
  return out;
}

InitialDist InitialDist::gaussian(Vec mean, Mat cov) {
  if (cov.rows() != mean.size() || cov.cols() != mean.size())
    throw Error(ErrorCode::kDimensionMismatch, "Gaussian initial covariance shape");
  if (!cov.isApprox(cov.transpose(), 1e-12))
    throw Error(ErrorCode::kValidation, "Gaussian initial covariance not symmetric");
  Eigen::LLT<Mat> llt(cov);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorCode::kValidation, "Gaussian initial covariance not positive definite");
  return InitialDist(GaussianOnZ{std::move(mean), std::move(cov)});
}

Vec HmmKernel::sample_stationary_state(Rng&) const {
  throw Error(ErrorCode::kNoStationarySampler, "state chain has no stationary sampler");
}

StateObs Kernel::sample_stationary(Rng&) const {
  throw Error(ErrorCode::kNoStationarySampler, "model has no stationary sampler");
}

double Kernel::stationary_logdensity(const StateObs&) const {
  throw Error(ErrorCode::kNoStationarySampler, "model has no closed-form stationary density");
}

StateObs sample_initial(const Kernel& kernel, const InitialDist& init, Rng& rng) {
  return std::visit(
      [&](const auto& k) -> StateObs {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, Stationary>) {
          if (!kernel.has_stationary())
            throw Error(ErrorCode::kNoStationarySampler,
                        "stationary initial law requested but unavailable");
          return kernel.sample_stationary(rng);
        } else if constexpr (std::is_same_v<K, PointMass>) {
          if (static_cast<std::size_t>(k.z.x.size()) != kernel.state_dim() ||
              static_cast<std::size_t>(k.z.y.size()) != kernel.obs_dim())
            throw Error(ErrorCode::kDimensionMismatch, "point mass outside Z");
          return k.z;
        } else if constexpr (std::is_same_v<K, GaussianOnZ>) {
          const auto dx = static_cast<Eigen::Index>(kernel.state_dim());
          const auto dy = static_cast<Eigen::Index>(kernel.obs_dim());
          if (k.mean.size() != dx + dy)
            throw Error(ErrorCode::kDimensionMismatch, "Gaussian initial law outside Z");
          Vec u(dx + dy);
          for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = rng.normal();
          const Vec z = k.mean + Eigen::LLT<Mat>(k.cov).matrixL() * u;
          return StateObs{z.head(dx), z.tail(dy)};
        } else {
          return k.sample(rng);
        }
      },
      init.kind());
}

Trajectory simulate_complete(const Model& model, const ParamPoint& theta,
                             const InitialDist& init, std::size_t n,
                             std::uint64_t seed, std::uint64_t stream) {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "simulate_complete needs n >= 1");
  const auto kernel = model.at(theta);
  Rng rng(seed, stream);
  Trajectory traj;
  traj.z.reserve(n + 1);
  traj.z.push_back(sample_initial(*kernel, init, rng));
  for (std::size_t k = 0; k < n; ++k) traj.z.push_back(kernel->sample(traj.z.back(), rng));
  return traj;
}

ObsSeq project_observations(const Trajectory& traj) {
  if (traj.size() < 2)
    throw Error(ErrorCode::kEmptyObservations, "trajectory carries no observation after z_0");
  ObsSeq out;
  out.y.reserve(traj.size() - 1);
  for (std::size_t k = 1; k < traj.size(); ++k) out.y.push_back(traj.z[k].y);
  return out;
}

double log_sum_exp(const std::vector<double>& v) {
  if (v.empty()) return kNegInf;
  const double m = *std::max_element(v.begin(), v.end());
  if (m == kNegInf) return kNegInf;
  if (m == std::numeric_limits<double>::infinity()) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

double log_sum_exp(const Vec& v) {
  return log_sum_exp(std::vector<double>(v.data(), v.data() + v.size()));
}

double gaussian_logdensity(const Vec& x, const Vec& mean, const Eigen::LLT<Mat>& cov_llt) {
  const Vec r = x - mean;
  const Mat& L = cov_llt.matrixLLT();
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < L.rows(); ++i) log_det += 2.0 * std::log(L(i, i));
  const Vec w = cov_llt.matrixL().solve(r);
  return -0.5 * (static_cast<double>(x.size()) * std::log(2.0 * std::numbers::pi) + log_det +
                 w.squaredNorm());
}

double gaussian_logdensity(double x, double mean, double var) {
  const double r = x - mean;
  return -0.5 * (std::log(2.0 * std::numbers::pi * var) + r * r / var);
}

}  // namespace fdpomm
