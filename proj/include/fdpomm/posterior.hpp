#ifndef FDPOMM_POSTERIOR_HPP_
#define FDPOMM_POSTERIOR_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <vector>

#include "fdpomm/grid.hpp"
#include "fdpomm/likelihood.hpp"
#include "fdpomm/model_core.hpp"

namespace fdpomm {

// Posterior on a grid. log_post is a log density with respect to Lebesgue
// measure on each cell, so exp(log_post[i]) * cell_volume[i] is the
// posterior mass of point i.
struct PosteriorGrid {
  ParamGrid grid;
  std::size_t n = 0;
  std::vector<double> log_post;
  std::vector<double> loglik;  // empty when n = 0
  bool normalized = true;

  std::vector<double> masses() const;
  Vec mean() const;
};

// kalman for linear Gaussian kernels, forward for finite ones; kUnsupported
// for anything without an exact recursion.
LogLik exact_loglik(const Model& model, const ParamPoint& theta, const ObsSeq& obs,
                    const InitialDist& init);

// Normalizes log prior + loglik over the grid; throws kDegeneratePosterior
// when every point has zero mass.
PosteriorGrid posterior_from_logliks(const ParamGrid& grid, const std::vector<double>& logliks,
                                     std::size_t n);

// n = 0 returns the normalized prior.
PosteriorGrid grid_posterior(const Model& model, const ParamGrid& grid, const ObsSeq& obs,
                             const InitialDist& init, const LikOptions& options);

// Log-likelihood of every grid point at every requested prefix length. Each
// point is filtered once over the longest prefix; result[i][j] is point i at
// ns[j]. Prefix values are exact for kalman and forward.
std::vector<std::vector<double>> grid_prefix_logliks(const Model& model, const ParamGrid& grid,
                                                     const ObsSeq& obs, const InitialDist& init,
                                                     const LikOptions& options,
                                                     const std::vector<std::size_t>& ns);

std::vector<PosteriorGrid> grid_posterior_prefixes(const Model& model, const ParamGrid& grid,
                                                   const ObsSeq& obs, const InitialDist& init,
                                                   const LikOptions& options,
                                                   const std::vector<std::size_t>& ns);

//----------------------------------------------------------------------
// Random-walk Metropolis.

struct MhOptions {
  std::size_t steps = 1000;
  Vec proposal_sd;
  ParamPoint start;
  std::uint64_t seed = 0;
  LikOptions lik;
  std::size_t burn_in = 0;
  std::size_t batches = 20;
};

struct MhResult {
  std::vector<ParamPoint> samples;  // after burn-in
  double acceptance_rate = 0.0;
  bool pseudo_marginal = false;      // bpf likelihood inside the chain
  bool degenerate_proposal = false;  // every proposal SD is zero
  Vec mean;
  Vec mean_se;  // batch means
};

// prior_logdensity may return -inf outside the support; proposals outside the
// parameter space are rejected.
MhResult mh_posterior(const Model& model,
                      const std::function<double(const ParamPoint&)>& prior_logdensity,
                      const ObsSeq& obs, const InitialDist& init, const MhOptions& options);

//----------------------------------------------------------------------
// Diagnostics.

struct ConcentrationRow {
  std::size_t n = 0;
  int p = 1;
  double mass_outside = 0.0;
};

// Tolerance applied to the boundary of A_p = {d(theta, theta*) >= 1/p}.
inline constexpr double kBoundaryTol = 1e-12;

std::vector<ConcentrationRow> concentration_profile(const std::vector<PosteriorGrid>& posteriors,
                                                    const ParamSpace& space,
                                                    const ParamPoint& theta_star,
                                                    const std::vector<int>& ps);

struct AmleResult {
  std::size_t index = 0;
  ParamPoint theta;
  double loglik = 0.0;
  std::optional<double> epsilon;  // n^-1 (loglik(theta_hat) - loglik(reference))
};

AmleResult amle_grid(const Model& model, const ParamGrid& grid, const ObsSeq& obs,
                     const InitialDist& init, const LikOptions& options,
                     std::optional<double> reference_loglik = std::nullopt);

// n^-1 log(p_{theta,eta}(y_{1:n}) / p_{theta,stationary}(y_{1:n})), n = 1..obs.size().
std::vector<double> merging_curve(const Model& model, const ParamPoint& theta,
                                  const InitialDist& eta, const ObsSeq& obs);

struct RemotenessResult {
  std::vector<std::size_t> ns;
  std::vector<double> log_ratio;  // log sum_{A} w_i p_i(y_{1:n}) / p_*(y_{1:n})
  std::vector<double> normalized;  // log_ratio / n
  double slope = 0.0;              // OLS of log_ratio on n over the last half of ns
  bool flagged = false;            // slope >= -1e-3: no sign of exponential decay
};

RemotenessResult remoteness_rate(const Model& model, const ParamGrid& grid,
                                 const std::function<bool(const ParamPoint&)>& in_set,
                                 const ObsSeq& obs, const InitialDist& init,
                                 const ParamPoint& theta_star, const std::vector<std::size_t>& ns);

struct ImageDensityResult {
  double max_residual = 0.0;
  std::size_t strings = 0;
};

// Exact check on a finite model that p_theta(y)/p_*(y) equals the conditional
// expectation under theta* of the complete-data ratio given y, for every
// observation string of length n. theta uses init eta, theta* its stationary law.
ImageDensityResult image_density_check(const Model& model, const ParamPoint& theta,
                                       const ParamPoint& theta_star, std::size_t n,
                                       const InitialDist& eta = InitialDist::stationary(),
                                       std::size_t enumeration_cap = 1u << 22);

struct RatioFrequency {
  double fraction = 0.0;  // paths with complete ratio > n^2 observed ratio
  double bound = 0.0;     // 1 / n^2
  double se = 0.0;
  std::size_t paths = 0;
};

// Simulates stationary paths under theta* and counts violations of the
// Markov-inequality event; both theta and theta* use stationary laws.
RatioFrequency image_ratio_frequency(const Model& model, const ParamPoint& theta,
                                     const ParamPoint& theta_star, std::size_t n,
                                     std::size_t paths, std::uint64_t seed);

void write_posterior_csv(std::ostream& os, const PosteriorGrid& post);
void write_concentration_csv(std::ostream& os, const std::vector<ConcentrationRow>& rows);

}  // namespace fdpomm

#endif  // FDPOMM_POSTERIOR_HPP_
