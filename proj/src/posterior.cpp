#include "fdpomm/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>

#include "fdpomm/error.hpp"
#include "fdpomm/models.hpp"
#include "fdpomm/parallel.hpp"

namespace fdpomm {

//----------------------------------------------------------------------
// Grids.

void ParamGrid::validate() const {
  if (points.empty()) throw Error(ErrorCode::kValidation, "grid has no points");
  if (prior_weight.size() != points.size() || cell_volume.size() != points.size())
    throw Error(ErrorCode::kDimensionMismatch, "grid weights and volumes must match its points");
  bool any = false;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!std::isfinite(prior_weight[i]) || prior_weight[i] < 0.0)
      throw Error(ErrorCode::kValidation, "prior weights must be finite and nonnegative");
    if (!(cell_volume[i] > 0.0) || !std::isfinite(cell_volume[i]))
      throw Error(ErrorCode::kValidation, "cell volumes must be positive");
    any = any || prior_weight[i] > 0.0;
  }
  if (!any) throw Error(ErrorCode::kValidation, "grid needs at least one positive prior weight");
}

ParamGrid linspace_grid(double lo, double hi, std::size_t count) {
  if (count < 2 || !(hi > lo)) throw Error(ErrorCode::kInvalidArgument, "linspace needs count >= 2, hi > lo");
  const double h = (hi - lo) / static_cast<double>(count - 1);
  ParamGrid g;
  for (std::size_t i = 0; i < count; ++i) {
    // Last point set exactly to hi so the endpoint is not lost to rounding.
    const double v = i + 1 == count ? hi : lo + h * static_cast<double>(i);
    g.points.push_back(ParamPoint{v});
    g.prior_weight.push_back(h);
    g.cell_volume.push_back(h);
  }
  return g;
}

ParamGrid cell_grid(double lo, double hi, std::size_t count) {
  if (count < 1 || !(hi > lo)) throw Error(ErrorCode::kInvalidArgument, "cell grid needs count >= 1, hi > lo");
  const double h = (hi - lo) / static_cast<double>(count);
  ParamGrid g;
  for (std::size_t i = 0; i < count; ++i) {
    g.points.push_back(ParamPoint{lo + h * (static_cast<double>(i) + 0.5)});
    g.prior_weight.push_back(h);
    g.cell_volume.push_back(h);
  }
  return g;
}

ParamGrid product_grid(const std::vector<ParamGrid>& axes) {
  if (axes.empty()) throw Error(ErrorCode::kInvalidArgument, "product of no axes");
  ParamGrid out;
  out.points.push_back(ParamPoint(Vec(0)));
  out.prior_weight.push_back(1.0);
  out.cell_volume.push_back(1.0);
  for (const ParamGrid& axis : axes) {
    axis.validate();
    ParamGrid next;
    for (std::size_t i = 0; i < out.size(); ++i) {
      for (std::size_t j = 0; j < axis.size(); ++j) {
        Vec c(out.points[i].coords.size() + axis.points[j].coords.size());
        c << out.points[i].coords, axis.points[j].coords;
        next.points.emplace_back(c);
        next.prior_weight.push_back(out.prior_weight[i] * axis.prior_weight[j]);
        next.cell_volume.push_back(out.cell_volume[i] * axis.cell_volume[j]);
      }
    }
    out = std::move(next);
  }
  return out;
}

ParamGrid with_prior_density(ParamGrid grid,
                             const std::function<double(const ParamPoint&)>& density) {
  for (std::size_t i = 0; i < grid.size(); ++i)
    grid.prior_weight[i] = density(grid.points[i]) * grid.cell_volume[i];
  grid.validate();
  return grid;
}

ParamGrid singleton_grid(const ParamPoint& theta) {
  ParamGrid g;
  g.points.push_back(theta);
  g.prior_weight.push_back(1.0);
  g.cell_volume.push_back(1.0);
  return g;
}

//----------------------------------------------------------------------
// Grid posterior.

std::vector<double> PosteriorGrid::masses() const {
  std::vector<double> m(log_post.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = std::exp(log_post[i]) * grid.cell_volume[i];
  return m;
}

Vec PosteriorGrid::mean() const {
  const auto m = masses();
  Vec out = Vec::Zero(grid.points.front().coords.size());
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m[i] > 0.0) out += m[i] * grid.points[i].coords;
  return out;
}

LogLik exact_loglik(const Model& model, const ParamPoint& theta, const ObsSeq& obs,
                    const InitialDist& init) {
  const auto kernel = model.at(theta);
  if (dynamic_cast<const GaussianLinearKernel*>(kernel.get()))
    return kalman_loglik(model, theta, obs, init);
  if (dynamic_cast<const FiniteHmmKernel*>(kernel.get()))
    return forward_loglik(model, theta, obs, init);
  throw Error(ErrorCode::kUnsupported, model.family() + " has no exact likelihood recursion");
}

PosteriorGrid posterior_from_logliks(const ParamGrid& grid, const std::vector<double>& logliks,
                                     std::size_t n) {
  grid.validate();
  if (logliks.size() != grid.size())
    throw Error(ErrorCode::kDimensionMismatch, "one log-likelihood per grid point required");
  std::vector<double> lw(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    lw[i] = grid.prior_weight[i] > 0.0 ? std::log(grid.prior_weight[i]) + logliks[i] : kNegInf;
    if (std::isnan(lw[i])) lw[i] = kNegInf;
  }
  const double z = log_sum_exp(lw);
  if (!std::isfinite(z))
    throw Error(ErrorCode::kDegeneratePosterior,
                "posterior mass is zero (or infinite) on every grid point at n = " +
                    std::to_string(n));
  PosteriorGrid post;
  post.grid = grid;
  post.n = n;
  post.loglik = n ? logliks : std::vector<double>{};
  post.log_post.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i)
    post.log_post[i] = lw[i] - z - std::log(grid.cell_volume[i]);
  return post;
}

PosteriorGrid grid_posterior(const Model& model, const ParamGrid& grid, const ObsSeq& obs,
                             const InitialDist& init, const LikOptions& options) {
  if (obs.empty()) return posterior_from_logliks(grid, std::vector<double>(grid.size(), 0.0), 0);
  std::vector<double> ll(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    LikOptions o = options;
    o.seed = mix64(options.seed + i);
    ll[i] = evaluate_loglik(model, grid.points[i], obs, init, o).value;
  });
  return posterior_from_logliks(grid, ll, obs.size());
}

std::vector<std::vector<double>> grid_prefix_logliks(const Model& model, const ParamGrid& grid,
                                                     const ObsSeq& obs, const InitialDist& init,
                                                     const LikOptions& options,
                                                     const std::vector<std::size_t>& ns) {
  std::size_t nmax = 0;
  for (std::size_t n : ns) nmax = std::max(nmax, n);
  if (nmax > obs.size())
    throw Error(ErrorCode::kInvalidArgument, "requested prefix longer than the observations");
  std::vector<std::vector<double>> out(grid.size(), std::vector<double>(ns.size(), 0.0));
  if (nmax == 0) return out;
  const ObsSeq data = obs.prefix(nmax);
  parallel_for(grid.size(), [&](std::size_t i) {
    LikOptions o = options;
    o.seed = mix64(options.seed + i);
    const auto prefix = evaluate_loglik(model, grid.points[i], data, init, o).prefix_values();
    for (std::size_t j = 0; j < ns.size(); ++j) out[i][j] = ns[j] ? prefix[ns[j] - 1] : 0.0;
  });
  return out;
}

std::vector<PosteriorGrid> grid_posterior_prefixes(const Model& model, const ParamGrid& grid,
                                                   const ObsSeq& obs, const InitialDist& init,
                                                   const LikOptions& options,
                                                   const std::vector<std::size_t>& ns) {
  const auto ll = grid_prefix_logliks(model, grid, obs, init, options, ns);
  std::vector<PosteriorGrid> out;
  out.reserve(ns.size());
  for (std::size_t j = 0; j < ns.size(); ++j) {
    std::vector<double> col(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) col[i] = ll[i][j];
    out.push_back(posterior_from_logliks(grid, col, ns[j]));
  }
  return out;
}

//----------------------------------------------------------------------
// Metropolis.

MhResult mh_posterior(const Model& model,
                      const std::function<double(const ParamPoint&)>& prior_logdensity,
                      const ObsSeq& obs, const InitialDist& init, const MhOptions& options) {
  const ParamSpace space = model.param_space();
  if (options.start.dim() != space.dims())
    throw Error(ErrorCode::kDimensionMismatch, "MH start has the wrong dimension");
  if (static_cast<std::size_t>(options.proposal_sd.size()) != space.dims())
    throw Error(ErrorCode::kDimensionMismatch, "one proposal SD per coordinate required");
  if (options.steps <= options.burn_in)
    throw Error(ErrorCode::kInvalidArgument, "MH needs more steps than burn-in");

  MhResult res;
  res.pseudo_marginal = options.lik.method == LikMethod::kBpf;
  res.degenerate_proposal = (options.proposal_sd.array() == 0.0).all();

  Rng rng(options.seed, 0x6d68);
  std::uint64_t lik_calls = 0;
  auto log_target = [&](const ParamPoint& theta) {
    if (!space.contains(theta)) return kNegInf;
    const double lp = prior_logdensity(theta);
    if (lp == kNegInf) return kNegInf;
    LikOptions o = options.lik;
    o.seed = mix64(options.lik.seed ^ mix64(++lik_calls));
    if (obs.empty()) return lp;
    return lp + evaluate_loglik(model, theta, obs, init, o).value;
  };

  ParamPoint current = options.start;
  double current_lt = log_target(current);
  if (!std::isfinite(current_lt))
    throw Error(ErrorCode::kZeroDensity, "MH start has zero posterior density");

  std::size_t accepted = 0;
  res.samples.reserve(options.steps - options.burn_in);
  for (std::size_t step = 0; step < options.steps; ++step) {
    if (!res.degenerate_proposal) {
      Vec c = current.coords;
      for (Eigen::Index j = 0; j < c.size(); ++j) c(j) += options.proposal_sd(j) * rng.normal();
      const ParamPoint prop(c);
      const double prop_lt = log_target(prop);
      if (prop_lt > kNegInf && std::log(rng.uniform()) < prop_lt - current_lt) {
        current = prop;
        current_lt = prop_lt;
        ++accepted;
      }
    }
    if (step >= options.burn_in) res.samples.push_back(current);
  }
  res.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(options.steps);

  const std::size_t m = res.samples.size();
  const auto d = static_cast<Eigen::Index>(space.dims());
  res.mean = Vec::Zero(d);
  for (const auto& s : res.samples) res.mean += s.coords;
  res.mean /= static_cast<double>(m);
  const std::size_t batches = std::max<std::size_t>(2, std::min(options.batches, m));
  const std::size_t per = m / batches;
  Vec acc = Vec::Zero(d);
  for (std::size_t b = 0; b < batches; ++b) {
    Vec bm = Vec::Zero(d);
    for (std::size_t i = b * per; i < (b + 1) * per; ++i) bm += res.samples[i].coords;
    bm /= static_cast<double>(per);
    acc += (bm - res.mean).array().square().matrix();
  }
  res.mean_se = (acc / static_cast<double>(batches - 1) / static_cast<double>(batches))
                    .array()
                    .sqrt()
                    .matrix();
  return res;
}

//----------------------------------------------------------------------
// Diagnostics.

std::vector<ConcentrationRow> concentration_profile(const std::vector<PosteriorGrid>& posteriors,
                                                    const ParamSpace& space,
                                                    const ParamPoint& theta_star,
                                                    const std::vector<int>& ps) {
  std::vector<ConcentrationRow> rows;
  for (const PosteriorGrid& post : posteriors) {
    const auto m = post.masses();
    for (int p : ps) {
      if (p < 1) throw Error(ErrorCode::kInvalidArgument, "p must be a positive integer");
      const double radius = 1.0 / static_cast<double>(p);
      double out = 0.0;
      for (std::size_t i = 0; i < m.size(); ++i)
        if (space.distance(post.grid.points[i], theta_star) >= radius - kBoundaryTol) out += m[i];
      rows.push_back({post.n, p, std::clamp(out, 0.0, 1.0)});
    }
  }
  return rows;
}

AmleResult amle_grid(const Model& model, const ParamGrid& grid, const ObsSeq& obs,
                     const InitialDist& init, const LikOptions& options,
                     std::optional<double> reference_loglik) {
  if (grid.points.empty()) throw Error(ErrorCode::kValidation, "grid has no points");
  std::vector<double> ll(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    LikOptions o = options;
    o.seed = mix64(options.seed + i);
    ll[i] = evaluate_loglik(model, grid.points[i], obs, init, o).value;
  });
  AmleResult res;
  res.loglik = kNegInf;
  bool found = false;
  for (std::size_t i = 0; i < ll.size(); ++i) {
    // Strict comparison keeps the lowest index among ties.
    if (!std::isnan(ll[i]) && (!found || ll[i] > res.loglik)) {
      if (ll[i] == kNegInf) continue;
      res.index = i;
      res.loglik = ll[i];
      found = true;
    }
  }
  if (!found) throw Error(ErrorCode::kZeroDensity, "likelihood is zero at every grid point");
  res.theta = grid.points[res.index];
  if (reference_loglik)
    res.epsilon = (res.loglik - *reference_loglik) / static_cast<double>(obs.size());
  return res;
}

std::vector<double> merging_curve(const Model& model, const ParamPoint& theta,
                                  const InitialDist& eta, const ObsSeq& obs) {
  const auto num = exact_loglik(model, theta, obs, eta).prefix_values();
  const auto den = exact_loglik(model, theta, obs, InitialDist::stationary()).prefix_values();
  std::vector<double> out(obs.size());
  for (std::size_t k = 0; k < obs.size(); ++k) {
    if (den[k] == kNegInf)
      throw Error(ErrorCode::kZeroDensity, "stationary likelihood vanished in merging_curve");
    out[k] = (num[k] - den[k]) / static_cast<double>(k + 1);
  }
  return out;
}

RemotenessResult remoteness_rate(const Model& model, const ParamGrid& grid,
                                 const std::function<bool(const ParamPoint&)>& in_set,
                                 const ObsSeq& obs, const InitialDist& init,
                                 const ParamPoint& theta_star, const std::vector<std::size_t>& ns) {
  if (ns.size() < 2) throw Error(ErrorCode::kInvalidArgument, "remoteness_rate needs two or more n");
  for (std::size_t j = 0; j < ns.size(); ++j)
    if (ns[j] == 0 || (j && ns[j] <= ns[j - 1]))
      throw Error(ErrorCode::kInvalidArgument, "n values must be positive and increasing");
  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (grid.prior_weight[i] > 0.0 && in_set(grid.points[i])) members.push_back(i);
  if (members.empty()) throw Error(ErrorCode::kValidation, "set A contains no grid point");

  ParamGrid sub;
  for (std::size_t i : members) {
    sub.points.push_back(grid.points[i]);
    sub.prior_weight.push_back(grid.prior_weight[i]);
    sub.cell_volume.push_back(grid.cell_volume[i]);
  }
  const ObsSeq data = obs.prefix(ns.back());
  std::vector<std::vector<double>> ll(sub.size());
  parallel_for(sub.size(), [&](std::size_t i) {
    const auto prefix = exact_loglik(model, sub.points[i], data, init).prefix_values();
    for (std::size_t n : ns) ll[i].push_back(prefix[n - 1]);
  });
  const auto ref =
      exact_loglik(model, theta_star, data, InitialDist::stationary()).prefix_values();

  RemotenessResult res;
  res.ns = ns;
  for (std::size_t j = 0; j < ns.size(); ++j) {
    std::vector<double> terms(sub.size());
    for (std::size_t i = 0; i < sub.size(); ++i) terms[i] = std::log(sub.prior_weight[i]) + ll[i][j];
    const double v = log_sum_exp(terms) - ref[ns[j] - 1];
    res.log_ratio.push_back(v);
    res.normalized.push_back(v / static_cast<double>(ns[j]));
  }
  // Ordinary least squares over the last half of the n range.
  const std::size_t first = ns.size() / 2 == ns.size() - 1 ? ns.size() - 2 : ns.size() / 2;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const auto m = static_cast<double>(ns.size() - first);
  for (std::size_t j = first; j < ns.size(); ++j) {
    const auto x = static_cast<double>(ns[j]);
    sx += x;
    sy += res.log_ratio[j];
    sxx += x * x;
    sxy += x * res.log_ratio[j];
  }
  res.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  res.flagged = res.slope >= -1e-3;
  return res;
}

namespace {

const FiniteHmmKernel& finite_kernel(const Kernel& k) {
  const auto* f = dynamic_cast<const FiniteHmmKernel*>(&k);
  if (!f) throw Error(ErrorCode::kUnsupported, "image_density_check needs a finite HMM");
  return *f;
}

// Law of X_0 for the complete-data density.
Vec x0_law(const FiniteHmmKernel& k, const InitialDist& init) {
  if (init.is_stationary()) return k.stationary();
  if (const auto* pm = init.point_mass()) {
    Vec e = Vec::Zero(static_cast<Eigen::Index>(k.params().states()));
    e(static_cast<Eigen::Index>(k.state_index(pm->z.x))) = 1.0;
    return e;
  }
  throw Error(ErrorCode::kUnsupported, "image_density_check supports stationary or point-mass laws");
}

// p-bar(x_{1:n}, y_{1:n}) with X_0 ~ law.
double complete_density(const FiniteHmmKernel& k, const Vec& law, const std::vector<int>& x,
                        const std::vector<int>& y) {
  const Mat& P = k.params().P;
  const Mat& G = k.params().G;
  double first = 0.0;
  for (Eigen::Index i = 0; i < law.size(); ++i) first += law(i) * P(i, x[0]);
  double d = first * G(x[0], y[0]);
  for (std::size_t t = 1; t < x.size(); ++t) d *= P(x[t - 1], x[t]) * G(x[t], y[t]);
  return d;
}

bool next_word(std::vector<int>& w, int base) {
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (++w[i] < base) return true;
    w[i] = 0;
  }
  return false;
}

}  // namespace

ImageDensityResult image_density_check(const Model& model, const ParamPoint& theta,
                                       const ParamPoint& theta_star, std::size_t n,
                                       const InitialDist& eta, std::size_t enumeration_cap) {
  if (n == 0) throw Error(ErrorCode::kEmptyObservations, "image_density_check needs n >= 1");
  const auto kt_ptr = model.at(theta);
  const auto ks_ptr = model.at(theta_star);
  const FiniteHmmKernel& kt = finite_kernel(*kt_ptr);
  const FiniteHmmKernel& ks = finite_kernel(*ks_ptr);
  const int K = static_cast<int>(kt.params().states());
  const int L = static_cast<int>(kt.params().symbols());
  const double total = std::pow(static_cast<double>(K) * L, static_cast<double>(n));
  if (total > static_cast<double>(enumeration_cap))
    throw Error(ErrorCode::kEnumerationCap, "(K L)^n paths exceed the enumeration cap");
  const Vec law_t = x0_law(kt, eta);
  const Vec law_s = ks.stationary();

  ImageDensityResult res;
  std::vector<int> y(n, 0);
  do {
    std::vector<double> vals(n);
    for (std::size_t t = 0; t < n; ++t) vals[t] = y[t];
    const ObsSeq obs = ObsSeq::scalar(vals);
    const double lt = forward_loglik(model, theta, obs, eta).value;
    const double ls = forward_loglik(model, theta_star, obs, InitialDist::stationary()).value;
    if (ls == kNegInf) continue;  // the identity holds P*-a.s. only
    const double lhs = std::exp(lt - ls);

    // E*[p-bar_theta / p-bar_* | y] by enumeration of hidden paths.
    std::vector<int> x(n, 0);
    double p_star_y = 0.0, weighted = 0.0;
    do {
      const double cs = complete_density(ks, law_s, x, y);
      if (cs == 0.0) continue;
      const double ct = complete_density(kt, law_t, x, y);
      p_star_y += cs;
      weighted += cs * (ct / cs);
    } while (next_word(x, K));
    const double rhs = weighted / p_star_y;
    res.max_residual = std::max(res.max_residual, std::abs(lhs - rhs));
    ++res.strings;
  } while (next_word(y, L));
  return res;
}

RatioFrequency image_ratio_frequency(const Model& model, const ParamPoint& theta,
                                     const ParamPoint& theta_star, std::size_t n,
                                     std::size_t paths, std::uint64_t seed) {
  if (n < 2 || paths == 0) throw Error(ErrorCode::kInvalidArgument, "need n >= 2 and paths >= 1");
  const auto kt = model.at(theta);
  const auto ks = model.at(theta_star);
  std::vector<char> hit(paths, 0);
  const double log_n2 = 2.0 * std::log(static_cast<double>(n));
  parallel_for(paths, [&](std::size_t r) {
    const Trajectory traj = simulate_complete(model, theta_star, InitialDist::stationary(), n,
                                              seed, r);
    // Complete-data densities of Z_{1:n}, both chains started at stationarity.
    double ct = kt->stationary_logdensity(traj.z[1]);
    double cs = ks->stationary_logdensity(traj.z[1]);
    for (std::size_t k = 1; k < n; ++k) {
      ct += kt->logdensity(traj.z[k], traj.z[k + 1]);
      cs += ks->logdensity(traj.z[k], traj.z[k + 1]);
    }
    ObsSeq obs;
    for (std::size_t k = 1; k <= n; ++k) obs.y.push_back(traj.z[k].y);
    const double ot = exact_loglik(model, theta, obs, InitialDist::stationary()).value;
    const double os = exact_loglik(model, theta_star, obs, InitialDist::stationary()).value;
    hit[r] = (ct - cs) > log_n2 + (ot - os) ? 1 : 0;
  });
  RatioFrequency res;
  res.paths = paths;
  res.fraction = static_cast<double>(std::accumulate(hit.begin(), hit.end(), 0)) /
                 static_cast<double>(paths);
  res.bound = 1.0 / static_cast<double>(n * n);
  res.se = std::sqrt(std::max(res.fraction * (1.0 - res.fraction), res.bound) /
                     static_cast<double>(paths));
  return res;
}

void write_posterior_csv(std::ostream& os, const PosteriorGrid& post) {
  const std::size_t d = post.grid.points.empty() ? 0 : post.grid.points.front().dim();
  for (std::size_t j = 0; j < d; ++j) os << "theta_" << j << ',';
  os << "log_post\n" << std::setprecision(17);
  for (std::size_t i = 0; i < post.grid.size(); ++i) {
    for (std::size_t j = 0; j < d; ++j) os << post.grid.points[i][j] << ',';
    os << post.log_post[i] << '\n';
  }
}

void write_concentration_csv(std::ostream& os, const std::vector<ConcentrationRow>& rows) {
  os << "n,p,mass_outside\n" << std::setprecision(17);
  for (const auto& r : rows) os << r.n << ',' << r.p << ',' << r.mass_outside << '\n';
}

}  // namespace fdpomm
