#ifndef FDPOMM_DIVERGENCE_HPP_
#define FDPOMM_DIVERGENCE_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include "fdpomm/grid.hpp"
#include "fdpomm/model_core.hpp"
#include "fdpomm/models.hpp"

namespace fdpomm {

enum class KldMethod { kClosedForm, kMc, kQuadrature };
const char* to_string(KldMethod m);

struct KldEstimate {
  double value = 0.0;        // +inf when the supports do not match
  std::optional<double> se;  // absent for closed forms
  KldMethod method = KldMethod::kClosedForm;
  bool infinite = false;
};

// KL(N(m0, S0) || N(m1, S1)).
double gaussian_kl(const GaussianLaw& p, const GaussianLaw& q);

// Delta(theta*, theta) = E_{pi*}[KL(q*(Z_0, .) || q_theta(Z_0, .))] by Monte
// Carlo over Z_0 ~ pi*. The inner divergence is exact when both kernels
// report Gaussian steps, otherwise a single log-ratio draw Z_1 ~ q*(Z_0, .).
KldEstimate step_kld_mc(const Model& model, const ParamPoint& theta_star,
                        const ParamPoint& theta, std::size_t draws, std::uint64_t seed);

// Closed form for the linear Gaussian model:
// 1/2 [tr(R^-1 R*) - d - log det(R^-1 R*) + tr(R^-1 (Phi - Phi*) Gamma* (Phi - Phi*)^T)].
KldEstimate delta_glm_closed(const GlmParams& star, const GlmParams& theta);

// Closed form for the stochastic volatility model, with the stationary
// moments of (X_0, X_1) exact. With draws > 0 the four moments are instead
// estimated by simulation and a standard error is attached.
KldEstimate delta_sv_closed(const SvParams& star, const SvParams& theta, std::size_t draws = 0,
                            std::uint64_t seed = 0);

// Delta-bar(theta*, theta) = int pi*_X(dx) pi_theta_X(dx') KL(g*(x, .) || g_theta(x', .)).
// Exact double sum for finite models; Monte Carlo over independent
// stationary draws otherwise.
KldEstimate delta_bar_hmm(const Model& model, const ParamPoint& theta_star,
                          const ParamPoint& theta, std::size_t draws, std::uint64_t seed);

// Delta through the best available route: closed form for the linear
// Gaussian and SV kernels, step_kld_mc otherwise.
KldEstimate delta(const Model& model, const ParamPoint& theta_star, const ParamPoint& theta,
                  std::size_t draws, std::uint64_t seed);

enum class DivergenceKind { kDelta, kDeltaBar };

struct DensenessRow {
  double delta = 0.0;
  double prior_mass = 0.0;
  bool zero_mass = false;
};

// Prior mass of {theta : divergence(theta) <= delta} for each delta, given the
// divergence already evaluated at every grid point.
std::vector<DensenessRow> information_denseness_profile(const ParamGrid& grid,
                                                        const std::vector<double>& divergences,
                                                        const std::vector<double>& deltas);

std::vector<DensenessRow> information_denseness_profile(const Model& model, const ParamGrid& grid,
                                                        const ParamPoint& theta_star,
                                                        const std::vector<double>& deltas,
                                                        DivergenceKind which, std::size_t draws,
                                                        std::uint64_t seed);

void write_denseness_csv(std::ostream& os, const std::vector<DensenessRow>& rows);

}  // namespace fdpomm

#endif  // FDPOMM_DIVERGENCE_HPP_
