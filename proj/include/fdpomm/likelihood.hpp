#ifndef FDPOMM_LIKELIHOOD_HPP_
#define FDPOMM_LIKELIHOOD_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fdpomm/model_core.hpp"

namespace fdpomm {

enum class LikMethod { kKalman, kForward, kBpf, kQuadrature };

const char* to_string(LikMethod m);
LikMethod lik_method_from_string(const std::string& s);

struct LogLik {
  double value = 0.0;
  std::size_t n = 0;
  LikMethod method = LikMethod::kKalman;
  std::optional<double> se;  // bpf only
  // increments[k] = log p(y_{k+1} | y_{1:k}); partial sums give every prefix.
  std::vector<double> increments;
  bool degenerate = false;  // bpf: every particle weight vanished at some step

  std::vector<double> prefix_values() const;
};

// Exact Gaussian prediction/update over the joint chain Z = (X, Y) with Y
// observed without noise. Accepts Stationary, PointMass and GaussianOnZ
// initial laws.
LogLik kalman_loglik(const Model& model, const ParamPoint& theta, const ObsSeq& obs,
                     const InitialDist& init);

// Exact forward recursion for finite-alphabet HMMs.
LogLik forward_loglik(const Model& model, const ParamPoint& theta, const ObsSeq& obs,
                      const InitialDist& init);

// Bootstrap particle filter, systematic resampling at every step. The
// standard error is the delta-method SE of the log estimate from the
// genealogy-based (Eve index) within-run variance estimator.
LogLik bpf_loglik(const Model& model, const ParamPoint& theta, const ObsSeq& obs,
                  const InitialDist& init, std::size_t particles, std::uint64_t seed);

// Trapezoid rule over a node grid spanning +-8 stationary SDs of a scalar
// state, evaluated as an iterated integral. Requires n <= 8.
LogLik quadrature_loglik(const Model& model, const ParamPoint& theta, const ObsSeq& obs,
                         const InitialDist& init, std::size_t nodes);

// V_n = E[log p(Y_n | Y_{1:n-1})] under the stationary law, n = 1..nmax, by
// enumerating every observation string.
std::vector<double> conditional_entropy_sequence(const Model& model, const ParamPoint& theta,
                                                 std::size_t nmax,
                                                 std::size_t enumeration_cap = 1u << 22);

// Log-domain forward pass over K states. log_pred1(i) = log P(X_1 = i);
// log_emission[k](i) = log g(i, y_{k+1}). Returns log p(y_{k+1} | y_{1:k}).
std::vector<double> forward_increments(const Vec& log_pred1, const Mat& log_trans,
                                       const std::vector<Vec>& log_emission);

struct LikOptions {
  LikMethod method = LikMethod::kKalman;
  std::size_t particles = 512;
  std::uint64_t seed = 0;
  std::size_t nodes = 401;
};

LogLik evaluate_loglik(const Model& model, const ParamPoint& theta, const ObsSeq& obs,
                       const InitialDist& init, const LikOptions& options);

}  // namespace fdpomm

#endif  // FDPOMM_LIKELIHOOD_HPP_
