#ifndef FDPOMM_MODELS_HPP_
#define FDPOMM_MODELS_HPP_

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>

#include "fdpomm/model_core.hpp"

namespace fdpomm {

//----------------------------------------------------------------------
// Parameter blocks.

// Z_{k+1} = Phi Z_k + eps_{k+1}, eps ~ N(0, R), Z = (X, Y) in R^p x R^q.
struct GlmParams {
  Mat Phi;
  Mat R;
  std::size_t p = 0;
  std::size_t q = 0;

  void validate() const;
};

// X_{k+1} = A X_k + zeta, Y_k = B X_k + xi.
struct SsmParams {
  Mat A;
  Mat B;
  Mat Qzeta;
  Mat Qxi;

  std::size_t p() const { return static_cast<std::size_t>(A.rows()); }
  std::size_t q() const { return static_cast<std::size_t>(B.rows()); }
  void validate() const;
};

// X_{k+1} = phi X_k + sigma zeta, Y_k = beta exp(X_k / 2) eps.
struct SvParams {
  double beta = 1.0;
  double sigma = 1.0;
  double phi = 0.0;
};

// Box of admissible SV parameters: beta >= beta_min, sigma >= sigma_min,
// |phi| <= phi_max.
struct SvBounds {
  double beta_min = 1e-3;
  double sigma_min = 1e-3;
  double phi_max = 0.999;

  void validate(const SvParams& params) const;
};

// K hidden states, L symbols; P is K x K, G is K x L, both row-stochastic.
struct FiniteHmmParams {
  Mat P;
  Mat G;

  std::size_t states() const { return static_cast<std::size_t>(P.rows()); }
  std::size_t symbols() const { return static_cast<std::size_t>(G.cols()); }
  void validate() const;
};

double spectral_radius(const Mat& m);

// Gamma = sum_k Phi^k R (Phi^T)^k, truncated once a term's Frobenius norm
// drops below tol.
Mat glm_stationary_cov(const GlmParams& params, double tol = 1e-12,
                       std::size_t max_terms = 1'000'000);

GlmParams ssm_embed(const SsmParams& params);

// Exact stationary vector of a row-stochastic matrix; throws when P has no
// unique stationary law or is periodic.
Vec finite_stationary(const Mat& P);

//----------------------------------------------------------------------
// Kernels.

class GaussianLinearKernel final : public Kernel, public HmmKernel {
 public:
  GaussianLinearKernel(GlmParams params, std::optional<SsmParams> ssm, double gamma_tol = 1e-12);

  std::size_t state_dim() const override { return params_.p; }
  std::size_t obs_dim() const override { return params_.q; }
  double logdensity(const StateObs& from, const StateObs& to) const override;
  StateObs sample(const StateObs& from, Rng& rng) const override;
  bool has_stationary() const override { return true; }
  StateObs sample_stationary(Rng& rng) const override;
  double stationary_logdensity(const StateObs& z) const override;
  std::optional<std::pair<double, double>> stationary_state_moments() const override;
  std::optional<GaussianLaw> gaussian_step(const StateObs& from) const override;
  bool ignores_source_obs() const override;
  const HmmKernel* hmm() const override { return ssm_ ? this : nullptr; }

  // HMM view; only meaningful when constructed from an SsmParams.
  double state_logdensity(const Vec& x, const Vec& x_next) const override;
  Vec sample_state(const Vec& x, Rng& rng) const override;
  double emission_logdensity(const Vec& x, const Vec& y) const override;
  Vec sample_emission(const Vec& x, Rng& rng) const override;
  std::optional<GaussianLaw> emission_gaussian(const Vec& x) const override;
  bool has_stationary_state() const override { return true; }
  Vec sample_stationary_state(Rng& rng) const override;

  const GlmParams& params() const { return params_; }
  const Mat& gamma() const { return gamma_; }
  const std::optional<SsmParams>& ssm() const { return ssm_; }

 private:
  Vec stack(const StateObs& z) const;
  StateObs split(const Vec& z) const;

  GlmParams params_;
  std::optional<SsmParams> ssm_;
  Eigen::LLT<Mat> r_llt_;
  Mat gamma_;
  Eigen::LLT<Mat> gamma_llt_;
  Eigen::LLT<Mat> qzeta_llt_;
  Eigen::LLT<Mat> qxi_llt_;
};

class SvKernel final : public Kernel, public HmmKernel {
 public:
  explicit SvKernel(SvParams params);

  std::size_t state_dim() const override { return 1; }
  std::size_t obs_dim() const override { return 1; }
  double logdensity(const StateObs& from, const StateObs& to) const override;
  StateObs sample(const StateObs& from, Rng& rng) const override;
  bool has_stationary() const override { return true; }
  StateObs sample_stationary(Rng& rng) const override;
  double stationary_logdensity(const StateObs& z) const override;
  std::optional<std::pair<double, double>> stationary_state_moments() const override;
  bool ignores_source_obs() const override { return true; }
  const HmmKernel* hmm() const override { return this; }

  double state_logdensity(const Vec& x, const Vec& x_next) const override;
  Vec sample_state(const Vec& x, Rng& rng) const override;
  double emission_logdensity(const Vec& x, const Vec& y) const override;
  Vec sample_emission(const Vec& x, Rng& rng) const override;
  std::optional<GaussianLaw> emission_gaussian(const Vec& x) const override;
  bool has_stationary_state() const override { return true; }
  Vec sample_stationary_state(Rng& rng) const override;

  const SvParams& params() const { return params_; }
  double stationary_variance() const;

  // Scalar forms of q_X and g.
  double log_qx(double x, double x_next) const;
  double log_g(double x, double y) const;

 private:
  SvParams params_;
};

class FiniteHmmKernel final : public Kernel, public HmmKernel {
 public:
  explicit FiniteHmmKernel(FiniteHmmParams params);

  std::size_t state_dim() const override { return 1; }
  std::size_t obs_dim() const override { return 1; }
  double logdensity(const StateObs& from, const StateObs& to) const override;
  StateObs sample(const StateObs& from, Rng& rng) const override;
  bool has_stationary() const override { return true; }
  StateObs sample_stationary(Rng& rng) const override;
  double stationary_logdensity(const StateObs& z) const override;
  bool ignores_source_obs() const override { return true; }
  const HmmKernel* hmm() const override { return this; }

  double state_logdensity(const Vec& x, const Vec& x_next) const override;
  Vec sample_state(const Vec& x, Rng& rng) const override;
  double emission_logdensity(const Vec& x, const Vec& y) const override;
  Vec sample_emission(const Vec& x, Rng& rng) const override;
  bool has_stationary_state() const override { return true; }
  Vec sample_stationary_state(Rng& rng) const override;

  const FiniteHmmParams& params() const { return params_; }
  const Vec& stationary() const { return stationary_; }

  // Index checks; throw kOutOfAlphabet.
  std::size_t state_index(const Vec& x) const;
  std::size_t symbol_index(const Vec& y) const;

 private:
  static std::size_t draw(const Eigen::Ref<const Vec>& probs, Rng& rng);

  FiniteHmmParams params_;
  Vec stationary_;
};

// i.i.d. observations as an HMM: q_X(x, x') = N(x'; 0, 1) regardless of x and
// theta, g(x', y') = N(y'; mean, sd^2) regardless of x'.
class IidGaussianKernel final : public Kernel, public HmmKernel {
 public:
  IidGaussianKernel(double mean, double sd);

  std::size_t state_dim() const override { return 1; }
  std::size_t obs_dim() const override { return 1; }
  double logdensity(const StateObs& from, const StateObs& to) const override;
  StateObs sample(const StateObs& from, Rng& rng) const override;
  bool has_stationary() const override { return true; }
  StateObs sample_stationary(Rng& rng) const override;
  double stationary_logdensity(const StateObs& z) const override;
  std::optional<std::pair<double, double>> stationary_state_moments() const override {
    return std::make_pair(0.0, 1.0);
  }
  bool ignores_source_obs() const override { return true; }
  const HmmKernel* hmm() const override { return this; }

  double state_logdensity(const Vec& x, const Vec& x_next) const override;
  Vec sample_state(const Vec& x, Rng& rng) const override;
  double emission_logdensity(const Vec& x, const Vec& y) const override;
  Vec sample_emission(const Vec& x, Rng& rng) const override;
  std::optional<GaussianLaw> emission_gaussian(const Vec& x) const override;
  bool has_stationary_state() const override { return true; }
  Vec sample_stationary_state(Rng& rng) const override;

  double mean() const { return mean_; }
  double sd() const { return sd_; }

 private:
  double mean_;
  double sd_;
};

//----------------------------------------------------------------------
// Families. Each maps a ParamPoint to a validated kernel.

// theta = [vec(Phi); vec(R)], column-major, (p+q)^2 entries each.
ModelPtr glm_spec(std::size_t p, std::size_t q);
ModelPtr glm_spec(const GlmParams& params);
ParamPoint glm_point(const GlmParams& params);
GlmParams glm_unpack(const ParamPoint& theta, std::size_t p, std::size_t q);

// theta = [vec(A); vec(B); vec(Qzeta); vec(Qxi)]. HMM factorization present.
ModelPtr ssm_spec(std::size_t p, std::size_t q);
ParamPoint ssm_point(const SsmParams& params);
SsmParams ssm_unpack(const ParamPoint& theta, std::size_t p, std::size_t q);

// Scalar state-space model indexed by theta = (a) with B, Qzeta, Qxi fixed.
ModelPtr ssm_scalar_family(double b, double q_zeta, double q_xi);

// theta = (beta, sigma, phi).
ModelPtr sv_spec(SvBounds bounds = {});
ParamPoint sv_point(const SvParams& params);
SvParams sv_unpack(const ParamPoint& theta);

// theta = [P row-major; G row-major].
ModelPtr finite_hmm_spec(std::size_t states, std::size_t symbols);
ModelPtr finite_hmm_spec(const FiniteHmmParams& params);
ParamPoint finite_point(const FiniteHmmParams& params);
FiniteHmmParams finite_unpack(const ParamPoint& theta, std::size_t states, std::size_t symbols);

// theta = (mean, sd).
ModelPtr iid_gaussian_spec();

// Family built from an arbitrary decoder; used for custom parameterizations.
ModelPtr make_family(std::string name, std::size_t state_dim, std::size_t obs_dim,
                     ParamSpace space,
                     std::function<std::shared_ptr<const Kernel>(const ParamPoint&)> decode);

}  // namespace fdpomm

#endif  // FDPOMM_MODELS_HPP_
