#include "fdpomm/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fdpomm/error.hpp"
#include "fdpomm/models.hpp"

namespace fdpomm {

const char* to_string(LikMethod m) {
  switch (m) {
    case LikMethod::kKalman: return "kalman";
    case LikMethod::kForward: return "forward";
    case LikMethod::kBpf: return "bpf";
    case LikMethod::kQuadrature: return "quadrature";
  }
  return "unknown";
}

LikMethod lik_method_from_string(const std::string& s) {
  if (s == "kalman") return LikMethod::kKalman;
  if (s == "forward") return LikMethod::kForward;
  if (s == "bpf") return LikMethod::kBpf;
  if (s == "quadrature") return LikMethod::kQuadrature;
  throw Error(ErrorCode::kInvalidArgument, "unknown likelihood method '" + s + "'");
}

std::vector<double> LogLik::prefix_values() const {
  std::vector<double> out(increments.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < increments.size(); ++k) {
    acc += increments[k];
    out[k] = acc;
  }
  return out;
}

namespace {

void require_obs(const ObsSeq& obs) {
  if (obs.empty()) throw Error(ErrorCode::kEmptyObservations, "likelihood needs n >= 1");
}

LogLik finish(std::vector<double> increments, LikMethod method) {
  LogLik out;
  out.method = method;
  out.n = increments.size();
  double acc = 0.0;
  for (double v : increments) acc += v;
  out.value = acc;
  out.increments = std::move(increments);
  return out;
}

}  // namespace

//----------------------------------------------------------------------
// Kalman.

LogLik kalman_loglik(const Model& model, const ParamPoint& theta, const ObsSeq& obs,
                     const InitialDist& init) {
  require_obs(obs);
  const auto kernel_ptr = model.at(theta);
  const auto* kernel = dynamic_cast<const GaussianLinearKernel*>(kernel_ptr.get());
  if (!kernel) throw Error(ErrorCode::kUnsupported, "kalman_loglik needs a linear Gaussian model");
  const GlmParams& g = kernel->params();
  const auto p = static_cast<Eigen::Index>(g.p);
  const auto q = static_cast<Eigen::Index>(g.q);
  const auto d = p + q;

  Vec m(d);
  Mat P(d, d);
  if (init.is_stationary()) {
    m.setZero();
    P = kernel->gamma();
  } else if (const auto* pm = init.point_mass()) {
    if (pm->z.x.size() != p || pm->z.y.size() != q)
      throw Error(ErrorCode::kDimensionMismatch, "point mass outside Z");
    m << pm->z.x, pm->z.y;
    P.setZero();
  } else if (const auto* gz = init.gaussian()) {
    if (gz->mean.size() != d) throw Error(ErrorCode::kDimensionMismatch, "initial law outside Z");
    m = gz->mean;
    P = gz->cov;
  } else {
    throw Error(ErrorCode::kUnsupported, "kalman_loglik needs a Gaussian initial law");
  }

  std::vector<double> inc;
  inc.reserve(obs.size());
  const double log2pi = std::log(2.0 * std::numbers::pi);
  for (const Vec& y : obs.y) {
    if (y.size() != q) throw Error(ErrorCode::kDimensionMismatch, "observation of wrong size");
    // Predict Z_k.
    m = g.Phi * m;
    P = g.Phi * P * g.Phi.transpose() + g.R;
    // Condition on Y_k.
    const Mat S = P.bottomRightCorner(q, q);
    Eigen::LLT<Mat> llt(S);
    if (llt.info() != Eigen::Success)
      throw Error(ErrorCode::kZeroDensity, "innovation covariance lost definiteness");
    const Vec v = y - m.tail(q);
    const Vec w = llt.matrixL().solve(v);
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < q; ++i) log_det += 2.0 * std::log(llt.matrixLLT()(i, i));
    inc.push_back(-0.5 * (static_cast<double>(q) * log2pi + log_det + w.squaredNorm()));
    const Mat cross = P.rightCols(q);                 // Cov(Z, Y)
    const Mat gain = llt.solve(cross.transpose()).transpose();
    m += gain * v;
    P -= gain * cross.transpose();
    P = 0.5 * (P + P.transpose());
  }
  return finish(std::move(inc), LikMethod::kKalman);
}

//----------------------------------------------------------------------
// Forward.

std::vector<double> forward_increments(const Vec& log_pred1, const Mat& log_trans,
                                       const std::vector<Vec>& log_emission) {
  const auto k = log_pred1.size();
  std::vector<double> inc;
  inc.reserve(log_emission.size());
  Vec log_pred = log_pred1;
  Vec alpha(k);
  for (std::size_t step = 0; step < log_emission.size(); ++step) {
    alpha = log_pred + log_emission[step];
    const double c = log_sum_exp(alpha);
    inc.push_back(c);
    if (c == kNegInf) {
      // Zero density: remaining increments are undefined, report -inf total.
      inc.resize(log_emission.size(), kNegInf);
      return inc;
    }
    alpha.array() -= c;
    if (step + 1 == log_emission.size()) break;
    for (Eigen::Index j = 0; j < k; ++j) {
      std::vector<double> terms(static_cast<std::size_t>(k));
      for (Eigen::Index i = 0; i < k; ++i)
        terms[static_cast<std::size_t>(i)] = alpha(i) + log_trans(i, j);
      log_pred(j) = log_sum_exp(terms);
    }
  }
  return inc;
}

namespace {

const FiniteHmmKernel& as_finite(const Kernel& kernel) {
  const auto* f = dynamic_cast<const FiniteHmmKernel*>(&kernel);
  if (!f) throw Error(ErrorCode::kUnsupported, "operation needs a finite-alphabet HMM");
  return *f;
}

// Law of X_0 on the finite state space.
Vec finite_initial_x(const FiniteHmmKernel& kernel, const InitialDist& init) {
  const auto k = static_cast<Eigen::Index>(kernel.params().states());
  if (init.is_stationary()) return kernel.stationary();
  if (const auto* pm = init.point_mass()) {
    Vec e = Vec::Zero(k);
    e(static_cast<Eigen::Index>(kernel.state_index(pm->z.x))) = 1.0;
    return e;
  }
  if (const auto* c = init.custom()) {
    Vec out = Vec::Zero(k);
    for (Eigen::Index i = 0; i < k; ++i)
      for (std::size_t j = 0; j < kernel.params().symbols(); ++j)
        out(i) += std::exp(c->logdensity(StateObs{Vec::Constant(1, static_cast<double>(i)),
                                                  Vec::Constant(1, static_cast<double>(j))}));
    return out;
  }
  throw Error(ErrorCode::kUnsupported, "Gaussian initial law on a finite state space");
}

}  // namespace

LogLik forward_loglik(const Model& model, const ParamPoint& theta, const ObsSeq& obs,
                      const InitialDist& init) {
  require_obs(obs);
  const auto kernel_ptr = model.at(theta);
  const FiniteHmmKernel& kernel = as_finite(*kernel_ptr);
  const Mat& P = kernel.params().P;
  const Mat& G = kernel.params().G;
  const Vec pred1 = (finite_initial_x(kernel, init).transpose() * P).transpose();
  std::vector<Vec> emis;
  emis.reserve(obs.size());
  for (const Vec& y : obs.y)
    emis.push_back(G.col(static_cast<Eigen::Index>(kernel.symbol_index(y))).array().log());
  return finish(forward_increments(pred1.array().log(), P.array().log(), emis),
                LikMethod::kForward);
}

//----------------------------------------------------------------------
// Bootstrap particle filter.

LogLik bpf_loglik(const Model& model, const ParamPoint& theta, const ObsSeq& obs,
                  const InitialDist& init, std::size_t particles, std::uint64_t seed) {
  require_obs(obs);
  if (particles < 2) throw Error(ErrorCode::kInvalidArgument, "bpf needs at least 2 particles");
  const auto kernel = model.at(theta);
  const HmmKernel* hmm = kernel->hmm();
  if (!hmm) throw Error(ErrorCode::kUnsupported, "bpf needs an HMM factorization");

  Rng rng(seed, 0x42);
  const std::size_t N = particles;
  std::vector<Vec> x(N), next(N);
  for (std::size_t i = 0; i < N; ++i) {
    if (init.is_stationary() && hmm->has_stationary_state())
      x[i] = hmm->sample_stationary_state(rng);
    else
      x[i] = sample_initial(*kernel, init, rng).x;
  }

  std::vector<double> logw(N), w(N);
  std::vector<std::size_t> eve(N), eve_next(N), ancestor(N);
  for (std::size_t i = 0; i < N; ++i) eve[i] = i;
  std::vector<double> inc;
  inc.reserve(obs.size());
  const double logN = std::log(static_cast<double>(N));
  double rel_var = 0.0;

  LogLik out;
  out.method = LikMethod::kBpf;
  for (std::size_t k = 0; k < obs.size(); ++k) {
    for (std::size_t i = 0; i < N; ++i) {
      x[i] = hmm->sample_state(x[i], rng);
      logw[i] = hmm->emission_logdensity(x[i], obs.y[k]);
    }
    const double lse = log_sum_exp(logw);
    if (lse == kNegInf) {
      out.degenerate = true;
      out.n = obs.size();
      out.value = kNegInf;
      inc.resize(obs.size(), kNegInf);
      out.increments = std::move(inc);
      return out;
    }
    inc.push_back(lse - logN);
    for (std::size_t i = 0; i < N; ++i) w[i] = std::exp(logw[i] - lse);

    if (k + 1 == obs.size()) {
      // Genealogy variance estimate before the final resampling:
      // relvar = 1 - (N/(N-1))^n * sum_{eve_i != eve_j} W_i W_j.
      std::vector<double> by_eve(N, 0.0);
      for (std::size_t i = 0; i < N; ++i) by_eve[eve[i]] += w[i];
      double same = 0.0;
      for (double s : by_eve) same += s * s;
      const double factor =
          std::exp(static_cast<double>(obs.size()) *
                   std::log(static_cast<double>(N) / static_cast<double>(N - 1)));
      rel_var = 1.0 - factor * (1.0 - same);
      break;
    }

    // Systematic resampling; fixed index order keeps results seed-determined.
    const double u0 = rng.uniform() / static_cast<double>(N);
    double cum = w[0];
    std::size_t j = 0;
    for (std::size_t i = 0; i < N; ++i) {
      const double u = u0 + static_cast<double>(i) / static_cast<double>(N);
      while (u > cum && j + 1 < N) cum += w[++j];
      ancestor[i] = j;
    }
    for (std::size_t i = 0; i < N; ++i) {
      next[i] = x[ancestor[i]];
      eve_next[i] = eve[ancestor[i]];
    }
    std::swap(x, next);
    std::swap(eve, eve_next);
  }
  out.n = obs.size();
  out.value = 0.0;
  for (double v : inc) out.value += v;
  out.increments = std::move(inc);
  out.se = std::sqrt(std::max(rel_var, 0.0));
  return out;
}

//----------------------------------------------------------------------
// Quadrature.

LogLik quadrature_loglik(const Model& model, const ParamPoint& theta, const ObsSeq& obs,
                         const InitialDist& init, std::size_t nodes) {
  require_obs(obs);
  if (model.state_dim() != 1)
    throw Error(ErrorCode::kUnsupported, "quadrature_loglik needs a scalar state");
  if (obs.size() > 8) throw Error(ErrorCode::kUnsupported, "quadrature_loglik supports n <= 8");
  if (nodes < 3) throw Error(ErrorCode::kInvalidArgument, "quadrature needs at least 3 nodes");
  const auto kernel = model.at(theta);
  const auto moments = kernel->stationary_state_moments();
  if (!moments) throw Error(ErrorCode::kUnsupported, "quadrature needs stationary state moments");

  double center_lo = moments->first, center_hi = moments->first, spread = moments->second;
  std::optional<std::pair<double, double>> init_x;  // Gaussian x-marginal of eta
  const PointMass* pm = init.point_mass();
  if (pm) {
    center_lo = std::min(center_lo, pm->z.x(0));
    center_hi = std::max(center_hi, pm->z.x(0));
  } else if (const auto* gz = init.gaussian()) {
    if (!kernel->ignores_source_obs())
      throw Error(ErrorCode::kUnsupported,
                  "quadrature with a Gaussian initial law needs q independent of y_0");
    init_x = std::make_pair(gz->mean(0), std::sqrt(gz->cov(0, 0)));
    center_lo = std::min(center_lo, init_x->first);
    center_hi = std::max(center_hi, init_x->first);
    spread = std::max(spread, init_x->second);
  } else if (!init.is_stationary()) {
    throw Error(ErrorCode::kUnsupported, "quadrature does not support custom initial laws");
  }
  const double lo = center_lo - 8.0 * spread;
  const double hi = center_hi + 8.0 * spread;
  const double h = (hi - lo) / static_cast<double>(nodes - 1);
  std::vector<double> grid(nodes), logw(nodes);
  for (std::size_t i = 0; i < nodes; ++i) {
    grid[i] = lo + h * static_cast<double>(i);
    logw[i] = std::log(h) - ((i == 0 || i + 1 == nodes) ? std::log(2.0) : 0.0);
  }

  const std::size_t n = obs.size();
  // zs[k][i] = (x_i, y_{k+1}).
  std::vector<std::vector<StateObs>> zs(n, std::vector<StateObs>(nodes));
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < nodes; ++i)
      zs[k][i] = StateObs{Vec::Constant(1, grid[i]), obs.y[k]};

  std::vector<double> alpha(nodes), terms(nodes);
  if (init.is_stationary()) {
    for (std::size_t j = 0; j < nodes; ++j) alpha[j] = kernel->stationary_logdensity(zs[0][j]);
  } else if (pm) {
    for (std::size_t j = 0; j < nodes; ++j) alpha[j] = kernel->logdensity(pm->z, zs[0][j]);
  } else {
    const Vec y0 = init.gaussian()->mean.tail(static_cast<Eigen::Index>(model.obs_dim()));
    std::vector<double> log_eta(nodes);
    for (std::size_t i = 0; i < nodes; ++i)
      log_eta[i] = gaussian_logdensity(grid[i], init_x->first, init_x->second * init_x->second) +
                   logw[i];
    for (std::size_t j = 0; j < nodes; ++j) {
      for (std::size_t i = 0; i < nodes; ++i)
        terms[i] = log_eta[i] + kernel->logdensity(StateObs{Vec::Constant(1, grid[i]), y0},
                                                   zs[0][j]);
      alpha[j] = log_sum_exp(terms);
    }
  }

  std::vector<double> prefix;
  prefix.reserve(n);
  auto total = [&]() {
    for (std::size_t j = 0; j < nodes; ++j) terms[j] = alpha[j] + logw[j];
    return log_sum_exp(terms);
  };
  prefix.push_back(total());
  std::vector<double> next(nodes);
  for (std::size_t k = 1; k < n; ++k) {
    for (std::size_t j = 0; j < nodes; ++j) {
      for (std::size_t i = 0; i < nodes; ++i)
        terms[i] = alpha[i] + logw[i] + kernel->logdensity(zs[k - 1][i], zs[k][j]);
      next[j] = log_sum_exp(terms);
    }
    std::swap(alpha, next);
    prefix.push_back(total());
  }
  std::vector<double> inc(n);
  for (std::size_t k = 0; k < n; ++k) inc[k] = prefix[k] - (k ? prefix[k - 1] : 0.0);
  LogLik out = finish(std::move(inc), LikMethod::kQuadrature);
  out.value = prefix.back();
  return out;
}

//----------------------------------------------------------------------
// Conditional entropy sequence.

std::vector<double> conditional_entropy_sequence(const Model& model, const ParamPoint& theta,
                                                 std::size_t nmax, std::size_t enumeration_cap) {
  const auto kernel_ptr = model.at(theta);
  const FiniteHmmKernel& kernel = as_finite(*kernel_ptr);
  const Mat& P = kernel.params().P;
  const Mat& G = kernel.params().G;
  const std::size_t L = kernel.params().symbols();
  double strings = 0.0, level = 1.0;
  for (std::size_t n = 1; n <= nmax; ++n) {
    level *= static_cast<double>(L);
    strings += level;
  }
  if (strings > static_cast<double>(enumeration_cap))
    throw Error(ErrorCode::kEnumerationCap, "L^nmax strings exceed the enumeration cap");

  // H[n] = sum over y_{1:n} of p log p.
  std::vector<double> H(nmax + 1, 0.0);
  // Depth-first walk carrying the predictive law of X_n and log p(y_{1:n-1}).
  struct Frame {
    Vec pred;
    double logp;
    std::size_t depth;
  };
  std::vector<Frame> stack;
  stack.push_back({kernel.stationary(), 0.0, 0});
  while (!stack.empty()) {
    Frame f = std::move(stack.back());
    stack.pop_back();
    if (f.depth == nmax) continue;
    for (std::size_t y = 0; y < L; ++y) {
      const Vec joint = f.pred.cwiseProduct(G.col(static_cast<Eigen::Index>(y)));
      const double py = joint.sum();
      if (py <= 0.0) continue;
      const double logp = f.logp + std::log(py);
      H[f.depth + 1] += std::exp(logp) * logp;
      stack.push_back({(joint.transpose() * P).transpose() / py, logp, f.depth + 1});
    }
  }
  std::vector<double> v(nmax);
  for (std::size_t n = 1; n <= nmax; ++n) v[n - 1] = H[n] - H[n - 1];
  return v;
}

LogLik evaluate_loglik(const Model& model, const ParamPoint& theta, const ObsSeq& obs,
                       const InitialDist& init, const LikOptions& options) {
  switch (options.method) {
    case LikMethod::kKalman: return kalman_loglik(model, theta, obs, init);
    case LikMethod::kForward: return forward_loglik(model, theta, obs, init);
    case LikMethod::kBpf: return bpf_loglik(model, theta, obs, init, options.particles, options.seed);
    case LikMethod::kQuadrature: return quadrature_loglik(model, theta, obs, init, options.nodes);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown likelihood method");
}

}  // namespace fdpomm
