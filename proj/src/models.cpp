#include "fdpomm/models.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <utility>

#include "fdpomm/error.hpp"

namespace fdpomm {

namespace {

Vec standard_normal(Eigen::Index n, Rng& rng) {
  Vec u(n);
  for (Eigen::Index i = 0; i < n; ++i) u(i) = rng.normal();
  return u;
}

bool is_spd(const Mat& m) {
  if (m.rows() != m.cols() || m.rows() == 0) return false;
  if (!m.isApprox(m.transpose(), 1e-12)) return false;
  Eigen::LLT<Mat> llt(m);
  return llt.info() == Eigen::Success;
}

Vec vec_of(const Mat& m) { return Eigen::Map<const Vec>(m.data(), m.size()); }

Mat mat_of(const Vec& v, Eigen::Index offset, Eigen::Index rows, Eigen::Index cols) {
  return Eigen::Map<const Mat>(v.data() + offset, rows, cols);
}

class Family final : public Model {
 public:
  using Decoder = std::function<std::shared_ptr<const Kernel>(const ParamPoint&)>;

  Family(std::string name, std::size_t state_dim, std::size_t obs_dim, ParamSpace space,
         Decoder decode)
      : name_(std::move(name)),
        state_dim_(state_dim),
        obs_dim_(obs_dim),
        space_(std::move(space)),
        decode_(std::move(decode)) {}

  std::string family() const override { return name_; }
  std::size_t state_dim() const override { return state_dim_; }
  std::size_t obs_dim() const override { return obs_dim_; }
  ParamSpace param_space() const override { return space_; }

  std::shared_ptr<const Kernel> at(const ParamPoint& theta) const override {
    if (theta.dim() != space_.dims())
      throw Error(ErrorCode::kDimensionMismatch,
                  name_ + ": expected " + std::to_string(space_.dims()) + " parameters, got " +
                      std::to_string(theta.dim()));
    if (!space_.contains(theta))
      throw Error(ErrorCode::kValidation, name_ + ": parameter outside its box");
    return decode_(theta);
  }

 private:
  std::string name_;
  std::size_t state_dim_;
  std::size_t obs_dim_;
  ParamSpace space_;
  Decoder decode_;
};

}  // namespace

//----------------------------------------------------------------------
// Validation.

void GlmParams::validate() const {
  const auto d = static_cast<Eigen::Index>(p + q);
  if (p == 0 || q == 0) throw Error(ErrorCode::kValidation, "GLM needs p, q >= 1");
  if (Phi.rows() != d || Phi.cols() != d || R.rows() != d || R.cols() != d)
    throw Error(ErrorCode::kDimensionMismatch, "GLM matrices must be (p+q) x (p+q)");
  if (!Phi.allFinite() || !R.allFinite())
    throw Error(ErrorCode::kValidation, "GLM matrices must be finite");
  if (spectral_radius(Phi) >= 1.0)
    throw Error(ErrorCode::kValidation, "spectral radius of Phi must be < 1");
  if (!is_spd(R)) throw Error(ErrorCode::kValidation, "R must be symmetric positive definite");
}

void SsmParams::validate() const {
  if (A.rows() == 0 || A.rows() != A.cols())
    throw Error(ErrorCode::kDimensionMismatch, "A must be square");
  if (B.cols() != A.rows() || B.rows() == 0)
    throw Error(ErrorCode::kDimensionMismatch, "B must be q x p");
  if (Qzeta.rows() != A.rows() || Qzeta.cols() != A.rows())
    throw Error(ErrorCode::kDimensionMismatch, "Qzeta must be p x p");
  if (Qxi.rows() != B.rows() || Qxi.cols() != B.rows())
    throw Error(ErrorCode::kDimensionMismatch, "Qxi must be q x q");
  if (spectral_radius(A) >= 1.0)
    throw Error(ErrorCode::kValidation, "spectral radius of A must be < 1");
  if (!is_spd(Qzeta) || !is_spd(Qxi))
    throw Error(ErrorCode::kValidation, "SSM covariances must be SPD");
}

void SvBounds::validate(const SvParams& params) const {
  if (!(beta_min > 0.0 && sigma_min > 0.0 && phi_max > 0.0 && phi_max < 1.0))
    throw Error(ErrorCode::kValidation, "SV bounds need beta_min, sigma_min > 0, phi_max in (0,1)");
  if (!(params.beta >= beta_min) || !(params.sigma >= sigma_min) ||
      !(std::abs(params.phi) <= phi_max) || !std::isfinite(params.beta) ||
      !std::isfinite(params.sigma))
    throw Error(ErrorCode::kValidation, "SV parameter outside its admissible box");
}

void FiniteHmmParams::validate() const {
  if (P.rows() == 0 || P.rows() != P.cols())
    throw Error(ErrorCode::kDimensionMismatch, "P must be square");
  if (G.rows() != P.rows() || G.cols() == 0)
    throw Error(ErrorCode::kDimensionMismatch, "G must be K x L");
  auto check_rows = [](const Mat& m, const char* name) {
    if ((m.array() < 0.0).any() || !m.allFinite())
      throw Error(ErrorCode::kValidation, std::string(name) + " has negative entries");
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (std::abs(m.row(i).sum() - 1.0) > 1e-12)
        throw Error(ErrorCode::kValidation, std::string(name) + " rows must sum to 1");
  };
  check_rows(P, "P");
  check_rows(G, "G");
}

double spectral_radius(const Mat& m) {
  if (m.size() == 0) return 0.0;
  Eigen::EigenSolver<Mat> es(m, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

Mat glm_stationary_cov(const GlmParams& params, double tol, std::size_t max_terms) {
  if (spectral_radius(params.Phi) >= 1.0)
    throw Error(ErrorCode::kValidation, "spectral radius of Phi must be < 1");
  Mat term = params.R;
  Mat gamma = term;
  for (std::size_t k = 1; k < max_terms; ++k) {
    if (term.norm() < tol) return 0.5 * (gamma + gamma.transpose());
    term = params.Phi * term * params.Phi.transpose();
    gamma += term;
  }
  throw Error(ErrorCode::kNonConvergence, "stationary covariance series did not converge");
}

GlmParams ssm_embed(const SsmParams& s) {
  s.validate();
  const auto p = s.A.rows();
  const auto q = s.B.rows();
  GlmParams g;
  g.p = static_cast<std::size_t>(p);
  g.q = static_cast<std::size_t>(q);
  g.Phi = Mat::Zero(p + q, p + q);
  g.Phi.topLeftCorner(p, p) = s.A;
  g.Phi.bottomLeftCorner(q, p) = s.B * s.A;
  // Covariance of (zeta, B zeta + xi).
  g.R = Mat::Zero(p + q, p + q);
  g.R.topLeftCorner(p, p) = s.Qzeta;
  g.R.topRightCorner(p, q) = s.Qzeta * s.B.transpose();
  g.R.bottomLeftCorner(q, p) = s.B * s.Qzeta;
  g.R.bottomRightCorner(q, q) = s.B * s.Qzeta * s.B.transpose() + s.Qxi;
  g.R = 0.5 * (g.R + g.R.transpose());
  return g;
}

Vec finite_stationary(const Mat& P) {
  const auto k = P.rows();
  Eigen::EigenSolver<Mat> es(P.transpose(), false);
  int unit = 0;
  for (Eigen::Index i = 0; i < k; ++i)
    if (std::abs(std::abs(es.eigenvalues()(i)) - 1.0) < 1e-9) ++unit;
  if (unit != 1)
    throw Error(ErrorCode::kValidation,
                "transition matrix has no unique aperiodic stationary law");
  // (P^T - I) pi = 0 with one row replaced by sum(pi) = 1.
  Mat a = P.transpose() - Mat::Identity(k, k);
  Vec rhs = Vec::Zero(k);
  a.row(k - 1).setOnes();
  rhs(k - 1) = 1.0;
  Vec pi = a.fullPivLu().solve(rhs);
  for (int it = 0; it < 3; ++it) {
    const Vec r = rhs - a * pi;
    pi += a.fullPivLu().solve(r);
  }
  pi = pi.cwiseMax(0.0);
  return pi / pi.sum();
}

//----------------------------------------------------------------------
// GaussianLinearKernel.

GaussianLinearKernel::GaussianLinearKernel(GlmParams params, std::optional<SsmParams> ssm,
                                           double gamma_tol)
    : params_(std::move(params)), ssm_(std::move(ssm)) {
  params_.validate();
  r_llt_.compute(params_.R);
  gamma_ = glm_stationary_cov(params_, gamma_tol);
  gamma_llt_.compute(gamma_);
  if (gamma_llt_.info() != Eigen::Success)
    throw Error(ErrorCode::kValidation, "stationary covariance not positive definite");
  if (ssm_) {
    qzeta_llt_.compute(ssm_->Qzeta);
    qxi_llt_.compute(ssm_->Qxi);
  }
}

Vec GaussianLinearKernel::stack(const StateObs& z) const {
  if (static_cast<std::size_t>(z.x.size()) != params_.p ||
      static_cast<std::size_t>(z.y.size()) != params_.q)
    throw Error(ErrorCode::kDimensionMismatch, "state-observation pair of wrong shape");
  Vec out(z.x.size() + z.y.size());
  out << z.x, z.y;
  return out;
}

StateObs GaussianLinearKernel::split(const Vec& z) const {
  const auto p = static_cast<Eigen::Index>(params_.p);
  const auto q = static_cast<Eigen::Index>(params_.q);
  return StateObs{z.head(p), z.tail(q)};
}

double GaussianLinearKernel::logdensity(const StateObs& from, const StateObs& to) const {
  return gaussian_logdensity(stack(to), params_.Phi * stack(from), r_llt_);
}

StateObs GaussianLinearKernel::sample(const StateObs& from, Rng& rng) const {
  const Vec eps = r_llt_.matrixL() * standard_normal(params_.R.rows(), rng);
  return split(params_.Phi * stack(from) + eps);
}

StateObs GaussianLinearKernel::sample_stationary(Rng& rng) const {
  return split(gamma_llt_.matrixL() * standard_normal(gamma_.rows(), rng));
}

double GaussianLinearKernel::stationary_logdensity(const StateObs& z) const {
  return gaussian_logdensity(stack(z), Vec::Zero(gamma_.rows()), gamma_llt_);
}

std::optional<std::pair<double, double>> GaussianLinearKernel::stationary_state_moments() const {
  if (params_.p != 1) return std::nullopt;
  return std::make_pair(0.0, std::sqrt(gamma_(0, 0)));
}

std::optional<GaussianLaw> GaussianLinearKernel::gaussian_step(const StateObs& from) const {
  return GaussianLaw{params_.Phi * stack(from), params_.R};
}

bool GaussianLinearKernel::ignores_source_obs() const {
  return params_.Phi.rightCols(static_cast<Eigen::Index>(params_.q)).isZero(0.0);
}

double GaussianLinearKernel::state_logdensity(const Vec& x, const Vec& x_next) const {
  return gaussian_logdensity(x_next, ssm_->A * x, qzeta_llt_);
}

Vec GaussianLinearKernel::sample_state(const Vec& x, Rng& rng) const {
  return ssm_->A * x + qzeta_llt_.matrixL() * standard_normal(ssm_->A.rows(), rng);
}

double GaussianLinearKernel::emission_logdensity(const Vec& x, const Vec& y) const {
  return gaussian_logdensity(y, ssm_->B * x, qxi_llt_);
}

Vec GaussianLinearKernel::sample_emission(const Vec& x, Rng& rng) const {
  return ssm_->B * x + qxi_llt_.matrixL() * standard_normal(ssm_->B.rows(), rng);
}

std::optional<GaussianLaw> GaussianLinearKernel::emission_gaussian(const Vec& x) const {
  if (!ssm_) return std::nullopt;
  return GaussianLaw{ssm_->B * x, ssm_->Qxi};
}

Vec GaussianLinearKernel::sample_stationary_state(Rng& rng) const {
  const auto p = static_cast<Eigen::Index>(params_.p);
  Eigen::LLT<Mat> llt(gamma_.topLeftCorner(p, p));
  return llt.matrixL() * standard_normal(p, rng);
}

//----------------------------------------------------------------------
// SvKernel.

SvKernel::SvKernel(SvParams params) : params_(params) {
  if (!(params_.beta > 0.0) || !(params_.sigma > 0.0) || !(std::abs(params_.phi) < 1.0))
    throw Error(ErrorCode::kValidation, "SV parameters need beta, sigma > 0 and |phi| < 1");
}

double SvKernel::stationary_variance() const {
  return params_.sigma * params_.sigma / (1.0 - params_.phi * params_.phi);
}

double SvKernel::log_qx(double x, double x_next) const {
  return gaussian_logdensity(x_next, params_.phi * x, params_.sigma * params_.sigma);
}

double SvKernel::log_g(double x, double y) const {
  const double b2 = params_.beta * params_.beta;
  return -0.5 * std::log(2.0 * std::numbers::pi * b2) - 0.5 * x -
         y * y * std::exp(-x) / (2.0 * b2);
}

double SvKernel::logdensity(const StateObs& from, const StateObs& to) const {
  return log_qx(from.x(0), to.x(0)) + log_g(to.x(0), to.y(0));
}

StateObs SvKernel::sample(const StateObs& from, Rng& rng) const {
  StateObs z{sample_state(from.x, rng), Vec()};
  z.y = sample_emission(z.x, rng);
  return z;
}

StateObs SvKernel::sample_stationary(Rng& rng) const {
  StateObs z{sample_stationary_state(rng), Vec()};
  z.y = sample_emission(z.x, rng);
  return z;
}

double SvKernel::stationary_logdensity(const StateObs& z) const {
  return gaussian_logdensity(z.x(0), 0.0, stationary_variance()) + log_g(z.x(0), z.y(0));
}

std::optional<std::pair<double, double>> SvKernel::stationary_state_moments() const {
  return std::make_pair(0.0, std::sqrt(stationary_variance()));
}

double SvKernel::state_logdensity(const Vec& x, const Vec& x_next) const {
  return log_qx(x(0), x_next(0));
}

Vec SvKernel::sample_state(const Vec& x, Rng& rng) const {
  return Vec::Constant(1, params_.phi * x(0) + params_.sigma * rng.normal());
}

double SvKernel::emission_logdensity(const Vec& x, const Vec& y) const {
  return log_g(x(0), y(0));
}

Vec SvKernel::sample_emission(const Vec& x, Rng& rng) const {
  return Vec::Constant(1, params_.beta * std::exp(0.5 * x(0)) * rng.normal());
}

std::optional<GaussianLaw> SvKernel::emission_gaussian(const Vec& x) const {
  return GaussianLaw{Vec::Zero(1),
                     Mat::Constant(1, 1, params_.beta * params_.beta * std::exp(x(0)))};
}

Vec SvKernel::sample_stationary_state(Rng& rng) const {
  return Vec::Constant(1, std::sqrt(stationary_variance()) * rng.normal());
}

//----------------------------------------------------------------------
// FiniteHmmKernel.

FiniteHmmKernel::FiniteHmmKernel(FiniteHmmParams params) : params_(std::move(params)) {
  params_.validate();
  stationary_ = finite_stationary(params_.P);
}

std::size_t FiniteHmmKernel::state_index(const Vec& x) const {
  if (x.size() != 1) throw Error(ErrorCode::kDimensionMismatch, "finite state must be scalar");
  const double v = x(0);
  if (!(v >= 0.0) || v != std::floor(v) || v >= static_cast<double>(params_.states()))
    throw Error(ErrorCode::kOutOfAlphabet, "state index out of range");
  return static_cast<std::size_t>(v);
}

std::size_t FiniteHmmKernel::symbol_index(const Vec& y) const {
  if (y.size() != 1) throw Error(ErrorCode::kDimensionMismatch, "finite symbol must be scalar");
  const double v = y(0);
  if (!(v >= 0.0) || v != std::floor(v) || v >= static_cast<double>(params_.symbols()))
    throw Error(ErrorCode::kOutOfAlphabet,
                "symbol " + std::to_string(v) + " outside alphabet of size " +
                    std::to_string(params_.symbols()));
  return static_cast<std::size_t>(v);
}

std::size_t FiniteHmmKernel::draw(const Eigen::Ref<const Vec>& probs, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    acc += probs(i);
    if (u < acc) return static_cast<std::size_t>(i);
  }
  // u beyond the accumulated mass by rounding: last state with positive mass.
  for (Eigen::Index i = probs.size() - 1; i > 0; --i)
    if (probs(i) > 0.0) return static_cast<std::size_t>(i);
  return 0;
}

double FiniteHmmKernel::logdensity(const StateObs& from, const StateObs& to) const {
  return state_logdensity(from.x, to.x) + emission_logdensity(to.x, to.y);
}

StateObs FiniteHmmKernel::sample(const StateObs& from, Rng& rng) const {
  StateObs z{sample_state(from.x, rng), Vec()};
  z.y = sample_emission(z.x, rng);
  return z;
}

StateObs FiniteHmmKernel::sample_stationary(Rng& rng) const {
  StateObs z{sample_stationary_state(rng), Vec()};
  z.y = sample_emission(z.x, rng);
  return z;
}

double FiniteHmmKernel::stationary_logdensity(const StateObs& z) const {
  const auto i = state_index(z.x);
  const auto j = symbol_index(z.y);
  return std::log(stationary_(static_cast<Eigen::Index>(i))) +
         std::log(params_.G(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
}

double FiniteHmmKernel::state_logdensity(const Vec& x, const Vec& x_next) const {
  return std::log(params_.P(static_cast<Eigen::Index>(state_index(x)),
                            static_cast<Eigen::Index>(state_index(x_next))));
}

Vec FiniteHmmKernel::sample_state(const Vec& x, Rng& rng) const {
  const Vec row = params_.P.row(static_cast<Eigen::Index>(state_index(x))).transpose();
  return Vec::Constant(1, static_cast<double>(draw(row, rng)));
}

double FiniteHmmKernel::emission_logdensity(const Vec& x, const Vec& y) const {
  return std::log(params_.G(static_cast<Eigen::Index>(state_index(x)),
                            static_cast<Eigen::Index>(symbol_index(y))));
}

Vec FiniteHmmKernel::sample_emission(const Vec& x, Rng& rng) const {
  const Vec row = params_.G.row(static_cast<Eigen::Index>(state_index(x))).transpose();
  return Vec::Constant(1, static_cast<double>(draw(row, rng)));
}

Vec FiniteHmmKernel::sample_stationary_state(Rng& rng) const {
  return Vec::Constant(1, static_cast<double>(draw(stationary_, rng)));
}

//----------------------------------------------------------------------
// IidGaussianKernel.

IidGaussianKernel::IidGaussianKernel(double mean, double sd) : mean_(mean), sd_(sd) {
  if (!std::isfinite(mean) || !(sd > 0.0) || !std::isfinite(sd))
    throw Error(ErrorCode::kValidation, "iid Gaussian needs finite mean and sd > 0");
}

double IidGaussianKernel::logdensity(const StateObs& from, const StateObs& to) const {
  return state_logdensity(from.x, to.x) + emission_logdensity(to.x, to.y);
}

StateObs IidGaussianKernel::sample(const StateObs& from, Rng& rng) const {
  StateObs z{sample_state(from.x, rng), Vec()};
  z.y = sample_emission(z.x, rng);
  return z;
}

StateObs IidGaussianKernel::sample_stationary(Rng& rng) const {
  return sample(StateObs{Vec::Zero(1), Vec::Zero(1)}, rng);
}

double IidGaussianKernel::stationary_logdensity(const StateObs& z) const {
  return gaussian_logdensity(z.x(0), 0.0, 1.0) + emission_logdensity(z.x, z.y);
}

double IidGaussianKernel::state_logdensity(const Vec&, const Vec& x_next) const {
  return gaussian_logdensity(x_next(0), 0.0, 1.0);
}

Vec IidGaussianKernel::sample_state(const Vec&, Rng& rng) const {
  return Vec::Constant(1, rng.normal());
}

double IidGaussianKernel::emission_logdensity(const Vec&, const Vec& y) const {
  return gaussian_logdensity(y(0), mean_, sd_ * sd_);
}

Vec IidGaussianKernel::sample_emission(const Vec&, Rng& rng) const {
  return Vec::Constant(1, mean_ + sd_ * rng.normal());
}

std::optional<GaussianLaw> IidGaussianKernel::emission_gaussian(const Vec&) const {
  return GaussianLaw{Vec::Constant(1, mean_), Mat::Constant(1, 1, sd_ * sd_)};
}

Vec IidGaussianKernel::sample_stationary_state(Rng& rng) const {
  return Vec::Constant(1, rng.normal());
}

//----------------------------------------------------------------------
// Families.

ModelPtr make_family(std::string name, std::size_t state_dim, std::size_t obs_dim,
                     ParamSpace space,
                     std::function<std::shared_ptr<const Kernel>(const ParamPoint&)> decode) {
  return std::make_shared<Family>(std::move(name), state_dim, obs_dim, std::move(space),
                                  std::move(decode));
}

ParamPoint glm_point(const GlmParams& params) {
  Vec out(params.Phi.size() + params.R.size());
  out << vec_of(params.Phi), vec_of(params.R);
  return ParamPoint(out);
}

GlmParams glm_unpack(const ParamPoint& theta, std::size_t p, std::size_t q) {
  const auto d = static_cast<Eigen::Index>(p + q);
  if (theta.coords.size() != 2 * d * d)
    throw Error(ErrorCode::kDimensionMismatch, "GLM parameter vector must hold 2(p+q)^2 entries");
  GlmParams g;
  g.p = p;
  g.q = q;
  g.Phi = mat_of(theta.coords, 0, d, d);
  g.R = mat_of(theta.coords, d * d, d, d);
  return g;
}

ModelPtr glm_spec(std::size_t p, std::size_t q) {
  const auto d = p + q;
  return make_family("glm", p, q, ParamSpace(2 * d * d), [p, q](const ParamPoint& theta) {
    return std::make_shared<const GaussianLinearKernel>(glm_unpack(theta, p, q), std::nullopt);
  });
}

ModelPtr glm_spec(const GlmParams& params) {
  params.validate();
  return glm_spec(params.p, params.q);
}

ParamPoint ssm_point(const SsmParams& s) {
  Vec out(s.A.size() + s.B.size() + s.Qzeta.size() + s.Qxi.size());
  out << vec_of(s.A), vec_of(s.B), vec_of(s.Qzeta), vec_of(s.Qxi);
  return ParamPoint(out);
}

SsmParams ssm_unpack(const ParamPoint& theta, std::size_t p_, std::size_t q_) {
  const auto p = static_cast<Eigen::Index>(p_);
  const auto q = static_cast<Eigen::Index>(q_);
  if (theta.coords.size() != p * p + q * p + p * p + q * q)
    throw Error(ErrorCode::kDimensionMismatch, "SSM parameter vector has wrong length");
  SsmParams s;
  Eigen::Index off = 0;
  s.A = mat_of(theta.coords, off, p, p);
  off += p * p;
  s.B = mat_of(theta.coords, off, q, p);
  off += q * p;
  s.Qzeta = mat_of(theta.coords, off, p, p);
  off += p * p;
  s.Qxi = mat_of(theta.coords, off, q, q);
  return s;
}

ModelPtr ssm_spec(std::size_t p, std::size_t q) {
  const auto dim = p * p + q * p + p * p + q * q;
  return make_family("ssm", p, q, ParamSpace(dim), [p, q](const ParamPoint& theta) {
    SsmParams s = ssm_unpack(theta, p, q);
    GlmParams g = ssm_embed(s);
    return std::make_shared<const GaussianLinearKernel>(std::move(g), std::move(s));
  });
}

ModelPtr ssm_scalar_family(double b, double q_zeta, double q_xi) {
  if (!(q_zeta > 0.0) || !(q_xi > 0.0) || !std::isfinite(b))
    throw Error(ErrorCode::kValidation, "scalar SSM needs finite b and positive variances");
  Vec lo(1), hi(1);
  lo << -1.0;
  hi << 1.0;
  return make_family("ssm1", 1, 1, ParamSpace(lo, hi), [=](const ParamPoint& theta) {
    SsmParams s;
    s.A = Mat::Constant(1, 1, theta[0]);
    s.B = Mat::Constant(1, 1, b);
    s.Qzeta = Mat::Constant(1, 1, q_zeta);
    s.Qxi = Mat::Constant(1, 1, q_xi);
    GlmParams g = ssm_embed(s);
    return std::make_shared<const GaussianLinearKernel>(std::move(g), std::move(s));
  });
}

ParamPoint sv_point(const SvParams& p) { return ParamPoint{p.beta, p.sigma, p.phi}; }

SvParams sv_unpack(const ParamPoint& theta) {
  if (theta.dim() != 3) throw Error(ErrorCode::kDimensionMismatch, "SV needs (beta, sigma, phi)");
  return SvParams{theta[0], theta[1], theta[2]};
}

ModelPtr sv_spec(SvBounds bounds) {
  bounds.validate(SvParams{bounds.beta_min, bounds.sigma_min, 0.0});
  const double inf = std::numeric_limits<double>::infinity();
  Vec lo(3), hi(3);
  lo << bounds.beta_min, bounds.sigma_min, -bounds.phi_max;
  hi << inf, inf, bounds.phi_max;
  return make_family("sv", 1, 1, ParamSpace(lo, hi), [bounds](const ParamPoint& theta) {
    const SvParams p = sv_unpack(theta);
    bounds.validate(p);
    return std::make_shared<const SvKernel>(p);
  });
}

ParamPoint finite_point(const FiniteHmmParams& params) {
  const auto k = params.P.rows();
  const auto l = params.G.cols();
  Vec out(k * k + k * l);
  Eigen::Index off = 0;
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) out(off++) = params.P(i, j);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < l; ++j) out(off++) = params.G(i, j);
  return ParamPoint(out);
}

FiniteHmmParams finite_unpack(const ParamPoint& theta, std::size_t states, std::size_t symbols) {
  const auto k = static_cast<Eigen::Index>(states);
  const auto l = static_cast<Eigen::Index>(symbols);
  if (theta.coords.size() != k * k + k * l)
    throw Error(ErrorCode::kDimensionMismatch, "finite HMM parameter vector has wrong length");
  FiniteHmmParams params;
  params.P.resize(k, k);
  params.G.resize(k, l);
  Eigen::Index off = 0;
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) params.P(i, j) = theta.coords(off++);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < l; ++j) params.G(i, j) = theta.coords(off++);
  return params;
}

ModelPtr finite_hmm_spec(std::size_t states, std::size_t symbols) {
  const auto dim = states * states + states * symbols;
  return make_family("finite", 1, 1,
                     ParamSpace(Vec::Zero(static_cast<Eigen::Index>(dim)),
                                Vec::Ones(static_cast<Eigen::Index>(dim))),
                     [states, symbols](const ParamPoint& theta) {
                       return std::make_shared<const FiniteHmmKernel>(
                           finite_unpack(theta, states, symbols));
                     });
}

ModelPtr finite_hmm_spec(const FiniteHmmParams& params) {
  FiniteHmmKernel check(params);
  return finite_hmm_spec(params.states(), params.symbols());
}

ModelPtr iid_gaussian_spec() {
  const double inf = std::numeric_limits<double>::infinity();
  Vec lo(2), hi(2);
  lo << -inf, 0.0;
  hi << inf, inf;
  return make_family("iid", 1, 1, ParamSpace(lo, hi), [](const ParamPoint& theta) {
    return std::make_shared<const IidGaussianKernel>(theta[0], theta[1]);
  });
}

}  // namespace fdpomm
