#include "fdpomm/audit.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "fdpomm/error.hpp"
#include "fdpomm/parallel.hpp"
#include "json.hpp"
#include "mc.hpp"

namespace fdpomm {

const char* to_string(AuditStatus s) {
  switch (s) {
    case AuditStatus::kPass: return "pass";
    case AuditStatus::kFail: return "fail";
    case AuditStatus::kEstimate: return "estimate";
  }
  return "unknown";
}

std::string AuditReport::to_json() const {
  nlohmann::ordered_json j;
  j["assumption"] = assumption;
  j["status"] = to_string(status);
  j["statistic"] = statistic;
  j["ci_lo"] = ci_lo ? nlohmann::ordered_json(*ci_lo) : nlohmann::ordered_json(nullptr);
  j["ci_hi"] = ci_hi ? nlohmann::ordered_json(*ci_hi) : nlohmann::ordered_json(nullptr);
  j["seed"] = seed;
  j["sims"] = sims;
  j["detail"] = detail;
  return j.dump();
}

void write_jsonl(std::ostream& os, const std::vector<AuditReport>& reports) {
  for (const auto& r : reports) os << r.to_json() << '\n';
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kLog2Pi = std::log(2.0 * std::numbers::pi);

double neg_log_abs(double y) { return y == 0.0 ? kInf : -std::log(std::abs(y)); }

double log_plus(double v) { return std::max(0.0, v); }

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

//----------------------------------------------------------------------
// SV envelopes.

SvRegion SvRegion::point(const SvParams& p) {
  SvRegion r;
  r.sigma_min = r.sigma_max = p.sigma;
  r.log_beta_min = r.log_beta_max = std::log(p.beta);
  r.phi_max = std::abs(p.phi);
  return r;
}

SvBoundParts psup_sv_log_bound(const SvRegion& region, const std::array<double, 3>& y) {
  if (!(region.sigma_min > 0.0) || region.sigma_max < region.sigma_min ||
      region.log_beta_max < region.log_beta_min || !(region.phi_max < 1.0) ||
      region.phi_max < 0.0)
    throw Error(ErrorCode::kInvalidArgument, "malformed SV region");
  SvBoundParts b;
  const double a1 = neg_log_abs(y[1]);
  const double a2 = neg_log_abs(y[2]);
  // 1 / (|y1| |y2| sqrt(2 pi sigma^2) sqrt(2 pi e)), largest at the smallest sigma.
  b.log_bound1 = a1 + a2 - kLog2Pi - std::log(region.sigma_min) - 0.5;

  // e^{sigma^2/8} / (2 pi beta^{1-phi}) [(1+phi) e^{-1} / y1^2]^{(1+phi)/2}.
  // Increasing in sigma, decreasing in beta; convex in phi, so the sup over
  // |phi| <= phi_max sits at an endpoint.
  if (!std::isfinite(region.sigma_max) || !std::isfinite(a1)) {
    b.log_bound2 = kInf;
  } else {
    auto at_phi = [&](double phi) {
      const double shape = 0.5 * (1.0 + phi) * (std::log1p(phi) - 1.0 + 2.0 * a1);
      return -(1.0 - phi) * region.log_beta_min + shape;
    };
    b.log_bound2 = region.sigma_max * region.sigma_max / 8.0 - kLog2Pi +
                   std::max(at_phi(-region.phi_max), at_phi(region.phi_max));
  }
  if (b.log_bound1 == kInf && b.log_bound2 == kInf)
    throw Error(ErrorCode::kInvalidArgument, "both SV envelopes are infinite for these y");
  return b;
}

double psup_sv_bound(const SvRegion& region, const std::array<double, 3>& y) {
  return std::exp(psup_sv_log_bound(region, y).log_bound());
}

std::array<SvRegion, 2> sv_cm_complement(const SvBounds& bounds, double m) {
  if (!(m > 1.0)) throw Error(ErrorCode::kInvalidArgument, "C_m needs m > 1");
  const double s_cut = std::sqrt(std::log(m));
  SvRegion big_sigma;
  big_sigma.sigma_min = std::max(bounds.sigma_min, s_cut);
  big_sigma.log_beta_min = std::log(bounds.beta_min);
  big_sigma.phi_max = bounds.phi_max;
  SvRegion big_beta;
  big_beta.sigma_min = bounds.sigma_min;
  big_beta.sigma_max = s_cut;
  big_beta.log_beta_min = std::max(std::log(bounds.beta_min), m);
  big_beta.phi_max = bounds.phi_max;
  return {big_sigma, big_beta};
}

double psup_sv_cm_complement_log(const SvBounds& bounds, double m, const std::array<double, 3>& y) {
  const auto regions = sv_cm_complement(bounds, m);
  double out = psup_sv_log_bound(regions[0], y).log_bound();
  if (regions[1].sigma_max >= regions[1].sigma_min)
    out = std::max(out, psup_sv_log_bound(regions[1], y).log_bound());
  return out;
}

double sv_block_density(const SvParams& theta, double x0, const std::array<double, 3>& y,
                        std::size_t nodes) {
  if (nodes < 3) throw Error(ErrorCode::kInvalidArgument, "quadrature needs at least 3 nodes");
  const SvKernel k(theta);
  const double half = 10.0 * theta.sigma;
  const double h = 2.0 * half / static_cast<double>(nodes - 1);
  auto weight = [&](std::size_t i) { return (i == 0 || i + 1 == nodes) ? 0.5 * h : h; };
  double outer = 0.0;
  for (std::size_t i = 0; i < nodes; ++i) {
    const double x1 = theta.phi * x0 - half + h * static_cast<double>(i);
    const double head = std::exp(k.log_qx(x0, x1) + k.log_g(x1, y[1]));
    if (head == 0.0) continue;
    double inner = 0.0;
    for (std::size_t j = 0; j < nodes; ++j) {
      const double x2 = theta.phi * x1 - half + h * static_cast<double>(j);
      inner += weight(j) * std::exp(k.log_qx(x1, x2) + k.log_g(x2, y[2]));
    }
    outer += weight(i) * head * inner;
  }
  return outer;
}

EnvelopeCheck sv_envelope_check(const SvRegion& region, std::size_t draws, std::uint64_t seed,
                                double tol, std::size_t nodes) {
  if (!std::isfinite(region.sigma_max) || !std::isfinite(region.log_beta_max))
    throw Error(ErrorCode::kInvalidArgument, "envelope check needs a bounded region");
  std::vector<double> excess(draws);
  parallel_for(draws, [&](std::size_t i) {
    Rng rng(seed, i);
    SvParams th;
    th.sigma = region.sigma_min + (region.sigma_max - region.sigma_min) * rng.uniform();
    th.beta = std::exp(region.log_beta_min +
                       (region.log_beta_max - region.log_beta_min) * rng.uniform());
    th.phi = region.phi_max * (2.0 * rng.uniform() - 1.0);
    const double x0 = 3.0 * rng.normal();
    const std::array<double, 3> y{th.beta * rng.normal(), th.beta * std::exp(rng.normal()) * rng.normal(),
                                  th.beta * std::exp(rng.normal()) * rng.normal()};
    const double d = sv_block_density(th, x0, y, nodes);
    excess[i] = d - psup_sv_bound(SvRegion::point(th), y);
  });
  EnvelopeCheck out;
  out.draws = draws;
  for (double e : excess) {
    out.max_excess = std::max(out.max_excess, e);
    if (e > tol) ++out.violations;
  }
  return out;
}

std::array<AuditReport, 2> tightness_audit_sv(const SvParams& star, const SvBounds& bounds,
                                              const std::vector<double>& m_list, std::size_t sims,
                                              std::uint64_t seed) {
  if (m_list.empty() || sims == 0)
    throw Error(ErrorCode::kInvalidArgument, "tightness audit needs m values and sims");
  bounds.validate(star);
  const SvKernel k(star);
  std::vector<std::array<double, 3>> ys(sims);
  parallel_for(sims, [&](std::size_t i) {
    Rng rng(seed, i);
    Vec x = k.sample_stationary_state(rng);
    std::array<double, 3> y{};
    for (int t = 0; t < 3; ++t) {
      if (t) x = k.sample_state(x, rng);
      y[t] = k.sample_emission(x, rng)(0);
    }
    ys[i] = y;
  });

  AuditReport conv;
  conv.assumption = "B5.conv";
  conv.status = AuditStatus::kEstimate;
  conv.seed = seed;
  conv.sims = sims;
  std::ostringstream detail;
  detail << "empirical max of psup over the complement of C_m;";
  double last = 0.0;
  for (double m : m_list) {
    double mx = kNegInf;
    for (const auto& y : ys) mx = std::max(mx, psup_sv_cm_complement_log(bounds, m, y));
    last = std::exp(mx);
    detail << " m=" << fmt(m) << ":" << fmt(last);
  }
  conv.statistic = last;
  conv.detail = detail.str();

  // log+ psup_Theta <= 1/2 log+(1/(4 pi^2 sigma_-^2 e)) + log+(1/|y1|) + log+(1/|y2|).
  const double c = 0.5 * log_plus(-std::log(4.0 * std::numbers::pi * std::numbers::pi *
                                            bounds.sigma_min * bounds.sigma_min * std::numbers::e));
  double sum = 0.0, sum2 = 0.0, direct = 0.0;
  SvRegion theta_box;
  theta_box.sigma_min = bounds.sigma_min;
  theta_box.log_beta_min = std::log(bounds.beta_min);
  theta_box.phi_max = bounds.phi_max;
  for (const auto& y : ys) {
    const double v = c + log_plus(neg_log_abs(y[1])) + log_plus(neg_log_abs(y[2]));
    sum += v;
    sum2 += v * v;
    direct += log_plus(psup_sv_log_bound(theta_box, y).log_bound());
  }
  const auto n = static_cast<double>(sims);
  const double mean = sum / n;
  const double se = sims > 1 ? std::sqrt(std::max(0.0, (sum2 - n * mean * mean) / (n - 1.0)) / n) : 0.0;
  AuditReport lm;
  lm.assumption = "B5.logmoment";
  lm.status = AuditStatus::kEstimate;
  lm.statistic = mean;
  lm.ci_lo = mean - 1.96 * se;
  lm.ci_hi = mean + 1.96 * se;
  lm.seed = seed;
  lm.sims = sims;
  lm.detail = "mean of the additive log+ envelope; mean of log+ of the envelope itself = " +
              fmt(direct / n);
  return {conv, lm};
}

double sv_jensen_bound(const SvParams& star) {
  return -0.5 * std::log(2.0 * std::numbers::pi * star.beta * star.beta) - 0.5;
}

double sv_jensen_bound_independent(const SvParams& star) {
  // The integration variable X' is independent of Y_1, so
  // E[Y_1^2 e^{-X'}] = beta^2 E[e^X] E[e^{-X}] = beta^2 e^{s^2}.
  const double s2 = star.sigma * star.sigma / (1.0 - star.phi * star.phi);
  return -0.5 * std::log(2.0 * std::numbers::pi * star.beta * star.beta) - 0.5 * std::exp(s2);
}

namespace {

// int over the box [beta_min, cut] x [sigma_min, cut] x [-phi_max, phi_max] of
// min(1/sigma, e^{sigma^2/8} / beta^{1-phi_max}) times the prior density,
// trapezoid on log(beta), log(sigma) and phi.
double b61_integral(const SvBounds& bounds, const SvPrior& prior, double cut) {
  constexpr std::size_t kLogNodes = 241;
  constexpr std::size_t kPhiNodes = 9;
  const double lb0 = std::log(bounds.beta_min), lb1 = std::log(std::max(cut, 2 * bounds.beta_min));
  const double ls0 = std::log(bounds.sigma_min), ls1 = std::log(std::max(cut, 2 * bounds.sigma_min));
  const double hb = (lb1 - lb0) / (kLogNodes - 1), hs = (ls1 - ls0) / (kLogNodes - 1);
  const double hp = 2.0 * bounds.phi_max / (kPhiNodes - 1);
  auto w = [](std::size_t i, std::size_t n, double h) { return (i == 0 || i + 1 == n) ? 0.5 * h : h; };
  double total = 0.0;
  for (std::size_t i = 0; i < kLogNodes; ++i) {
    const double lb = lb0 + hb * static_cast<double>(i);
    for (std::size_t j = 0; j < kLogNodes; ++j) {
      const double ls = ls0 + hs * static_cast<double>(j);
      const double sigma = std::exp(ls);
      const double log_f = std::min(-ls, sigma * sigma / 8.0 - (1.0 - bounds.phi_max) * lb);
      for (std::size_t k = 0; k < kPhiNodes; ++k) {
        const double phi = -bounds.phi_max + hp * static_cast<double>(k);
        const double dens = prior.density(SvParams{std::exp(lb), sigma, phi});
        if (dens <= 0.0) continue;
        // Jacobian beta * sigma of the log substitution.
        total += w(i, kLogNodes, hb) * w(j, kLogNodes, hs) * w(k, kPhiNodes, hp) * dens *
                 std::exp(log_f + lb + ls);
      }
    }
  }
  return total;
}

}  // namespace

std::array<AuditReport, 2> b6_audit(const SvParams& star, const SvBounds& bounds,
                                    const SvPrior& prior, std::size_t draws, std::uint64_t seed) {
  if (!prior.density) throw Error(ErrorCode::kInvalidArgument, "B6.1 needs a prior density on (beta, sigma, phi)");
  bounds.validate(star);
  AuditReport b1;
  b1.assumption = "B6.1";
  b1.seed = seed;
  if (prior.proper) {
    b1.status = AuditStatus::kPass;
    b1.statistic = 1.0;
    b1.detail = "proper prior: a finite measure satisfies the condition";
  } else {
    // Cutoff growth: the integral over growing boxes must settle.
    const std::vector<double> cuts{1e1, 1e2, 1e3, 1e4};
    std::vector<double> vals;
    std::ostringstream d;
    d << "sufficient integrand over growing boxes;";
    for (double c : cuts) {
      vals.push_back(b61_integral(bounds, prior, c));
      d << " cut=" << fmt(c) << ":" << fmt(vals.back());
    }
    const double growth = (vals.back() - vals[vals.size() - 2]) / vals.back();
    const bool finite = std::isfinite(vals.back()) && growth < 1e-3;
    b1.status = finite ? AuditStatus::kPass : AuditStatus::kFail;
    b1.statistic = vals.back();
    b1.detail = d.str() + (finite ? "; converged" : "; diverges with the cutoff");
  }

  // E[log p(Y_1)] under the stationary law, log p by trapezoid over x.
  const SvKernel k(star);
  const double sd = std::sqrt(k.stationary_variance());
  constexpr std::size_t kNodes = 801;
  const double h = 20.0 * sd / (kNodes - 1);
  const auto r = detail::mc_mean(draws, seed, 7, [&](Rng& rng) {
    const Vec x = k.sample_stationary_state(rng);
    const double y = k.sample_emission(x, rng)(0);
    std::vector<double> terms(kNodes);
    for (std::size_t i = 0; i < kNodes; ++i) {
      const double xi = -10.0 * sd + h * static_cast<double>(i);
      terms[i] = gaussian_logdensity(xi, 0.0, sd * sd) + k.log_g(xi, y) + std::log(h) -
                 ((i == 0 || i + 1 == kNodes) ? std::log(2.0) : 0.0);
    }
    return log_sum_exp(terms);
  });
  AuditReport b2;
  b2.assumption = "B6.2";
  b2.status = AuditStatus::kEstimate;
  b2.statistic = r.mean;
  b2.ci_lo = r.mean - 1.96 * r.se;
  b2.ci_hi = r.mean + 1.96 * r.se;
  b2.seed = seed;
  b2.sims = draws;
  const double jb = sv_jensen_bound(star);
  const double ji = sv_jensen_bound_independent(star);
  b2.detail = "E[log p(Y_1)] with n0 = 1; closed form -log(2 pi beta^2)/2 - 1/2 = " + fmt(jb) +
              ", margin in SE " + fmt(r.se > 0 ? (r.mean - jb) / r.se : kInf) +
              "; decoupled Jensen bound " + fmt(ji) + ", margin in SE " +
              fmt(r.se > 0 ? (r.mean - ji) / r.se : kInf);
  return {b1, b2};
}

//----------------------------------------------------------------------
// Kingman.

std::vector<Triple> random_triples(std::size_t n, std::size_t count, std::uint64_t seed) {
  Rng rng(seed, 0x4b);
  std::vector<Triple> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::array<std::size_t, 3> v{};
    for (auto& x : v) x = static_cast<std::size_t>(rng() % (n + 1));
    std::sort(v.begin(), v.end());
    out.push_back({v[0], v[1], v[2]});
  }
  return out;
}

AuditReport kingman_check(const LogWFunction& log_w, const std::vector<Triple>& triples,
                          double tol) {
  AuditReport rep;
  rep.assumption = "Kingman";
  rep.sims = triples.size();
  double worst = kNegInf;
  std::size_t violations = 0;
  for (const Triple& tr : triples) {
    if (!(tr.r <= tr.s && tr.s <= tr.t))
      throw Error(ErrorCode::kInvalidArgument, "triples need r <= s <= t");
    const double gap = log_w(tr.r, tr.t) - log_w(tr.r, tr.s) - log_w(tr.s, tr.t);
    worst = std::max(worst, gap);
    if (gap > tol) ++violations;
  }
  rep.statistic = worst;
  rep.status = violations ? AuditStatus::kFail : AuditStatus::kPass;
  rep.detail = std::to_string(violations) + " violations of W(r,t) <= W(r,s) W(s,t)";
  return rep;
}

LogWFunction finite_hmm_log_w(const Model& model, const std::vector<ParamPoint>& thetas,
                              const ObsSeq& obs) {
  if (thetas.empty()) throw Error(ErrorCode::kInvalidArgument, "need at least one parameter");
  std::vector<std::shared_ptr<const FiniteHmmKernel>> kernels;
  for (const auto& th : thetas) {
    auto k = std::dynamic_pointer_cast<const FiniteHmmKernel>(model.at(th));
    if (!k) throw Error(ErrorCode::kUnsupported, "finite_hmm_log_w needs a finite HMM");
    kernels.push_back(std::move(k));
  }
  std::vector<std::size_t> sym;
  for (const Vec& y : obs.y) sym.push_back(kernels.front()->symbol_index(y));
  return [kernels, sym](std::size_t r, std::size_t t) {
    if (t > sym.size() || r > t) throw Error(ErrorCode::kInvalidArgument, "W index out of range");
    if (r == t) return 0.0;
    double best = kNegInf;
    for (const auto& k : kernels) {
      const Mat& P = k->params().P;
      const Mat& G = k->params().G;
      Vec b = Vec::Ones(P.rows());
      double log_scale = 0.0;
      // obs index k-1 holds y_k.
      for (std::size_t kk = t; kk > r; --kk) {
        b = P * G.col(static_cast<Eigen::Index>(sym[kk - 1])).cwiseProduct(b);
        const double mx = b.maxCoeff();
        if (mx == 0.0) {
          log_scale = kNegInf;
          break;
        }
        b /= mx;
        log_scale += std::log(mx);
      }
      best = std::max(best, log_scale + (log_scale == kNegInf ? 0.0 : std::log(b.maxCoeff())));
    }
    return best;
  };
}

LogWFunction sv_envelope_log_w(const SvBounds& bounds, const ObsSeq& obs) {
  std::vector<double> y;
  for (const Vec& v : obs.y) y.push_back(v(0));
  const double one_const = -0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e);
  const double two_const = -kLog2Pi - std::log(bounds.sigma_min) - 0.5;
  return [y, one_const, two_const](std::size_t r, std::size_t t) {
    if (t > y.size() || r > t) throw Error(ErrorCode::kInvalidArgument, "W index out of range");
    std::vector<double> f(t - r + 1, kInf);
    f[0] = 0.0;
    for (std::size_t j = 1; j <= t - r; ++j) {
      const std::size_t k = r + j;  // block ends at y_k, stored at index k-1
      f[j] = f[j - 1] + one_const + neg_log_abs(y[k - 1]);
      if (j >= 2)
        f[j] = std::min(f[j], f[j - 2] + two_const + neg_log_abs(y[k - 2]) + neg_log_abs(y[k - 1]));
    }
    return f[t - r];
  };
}

//----------------------------------------------------------------------
// Positivity.

AuditReport positivity_audit(const Model& model, const std::vector<ParamPoint>& thetas,
                             PositivityKind which, std::size_t samples, std::uint64_t seed) {
  AuditReport rep;
  rep.assumption = which == PositivityKind::kB3 ? "B3" : "C2";
  rep.seed = seed;
  std::size_t zeros = 0, checked = 0;
  std::string note;
  for (std::size_t t = 0; t < thetas.size(); ++t) {
    const auto kernel = model.at(thetas[t]);
    if (const auto* f = dynamic_cast<const FiniteHmmKernel*>(kernel.get())) {
      const Mat& P = f->params().P;
      const Mat& G = f->params().G;
      checked += static_cast<std::size_t>(G.size() + (which == PositivityKind::kB3 ? P.size() : 0));
      zeros += static_cast<std::size_t>((G.array() <= 0.0).count());
      if (which == PositivityKind::kB3) zeros += static_cast<std::size_t>((P.array() <= 0.0).count());
      continue;
    }
    const HmmKernel* hmm = kernel->hmm();
    if (which == PositivityKind::kC2 && !hmm) {
      ++zeros;
      note = "; no HMM factorization";
      continue;
    }
    Rng rng(seed, t);
    const auto sx = static_cast<Eigen::Index>(model.state_dim());
    const auto sy = static_cast<Eigen::Index>(model.obs_dim());
    auto random_vec = [&](Eigen::Index n, double scale) {
      Vec v(n);
      for (Eigen::Index i = 0; i < n; ++i) v(i) = scale * rng.normal();
      return v;
    };
    std::vector<std::pair<StateObs, StateObs>> pts;
    for (std::size_t s = 0; s < samples; ++s) {
      StateObs from = kernel->has_stationary() ? kernel->sample_stationary(rng)
                                               : StateObs{random_vec(sx, 1.0), random_vec(sy, 1.0)};
      pts.push_back({from, StateObs{random_vec(sx, 5.0), random_vec(sy, 5.0)}});
    }
    for (double e : {-50.0, 0.0, 50.0})
      for (double f : {-50.0, 0.0, 50.0})
        pts.push_back({StateObs{Vec::Constant(sx, e), Vec::Constant(sy, f)},
                       StateObs{Vec::Constant(sx, f), Vec::Constant(sy, e)}});
    for (const auto& [a, b] : pts) {
      const double v = which == PositivityKind::kB3 ? kernel->logdensity(a, b)
                                                    : hmm->emission_logdensity(b.x, b.y);
      ++checked;
      if (!(v > kNegInf)) ++zeros;
    }
  }
  rep.sims = checked;
  rep.statistic = static_cast<double>(zeros);
  rep.status = zeros ? AuditStatus::kFail : AuditStatus::kPass;
  rep.detail = std::to_string(zeros) + " zero densities among " + std::to_string(checked) +
               " evaluations" + note;
  return rep;
}

}  // namespace fdpomm
