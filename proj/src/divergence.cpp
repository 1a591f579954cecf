#include "fdpomm/divergence.hpp"

#include <cmath>
#include <iomanip>
#include <limits>

#include "fdpomm/error.hpp"
#include "mc.hpp"

namespace fdpomm {

const char* to_string(KldMethod m) {
  switch (m) {
    case KldMethod::kClosedForm: return "closed_form";
    case KldMethod::kMc: return "mc";
    case KldMethod::kQuadrature: return "quadrature";
  }
  return "unknown";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double log_det_spd(const Eigen::LLT<Mat>& llt) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < llt.matrixLLT().rows(); ++i)
    s += 2.0 * std::log(llt.matrixLLT()(i, i));
  return s;
}

Eigen::LLT<Mat> checked_llt(const Mat& m, const char* what) {
  Eigen::LLT<Mat> llt(m);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::kValidation, std::string(what) + " is not SPD");
  return llt;
}

KldEstimate from_mc(const detail::MeanSe& r) {
  KldEstimate out;
  out.method = KldMethod::kMc;
  out.value = r.mean;
  out.se = r.se;
  out.infinite = r.infinite;
  return out;
}

}  // namespace

double gaussian_kl(const GaussianLaw& p, const GaussianLaw& q) {
  const auto d = p.mean.size();
  const auto lp = checked_llt(p.cov, "covariance");
  const auto lq = checked_llt(q.cov, "covariance");
  if (p.mean == q.mean && p.cov == q.cov) return 0.0;
  const Vec diff = q.mean - p.mean;
  const double trace = lq.solve(p.cov).trace();
  const double maha = diff.dot(lq.solve(diff));
  return 0.5 * (trace - static_cast<double>(d) + maha + log_det_spd(lq) - log_det_spd(lp));
}

KldEstimate step_kld_mc(const Model& model, const ParamPoint& theta_star,
                        const ParamPoint& theta, std::size_t draws, std::uint64_t seed) {
  if (draws < 2) throw Error(ErrorCode::kInvalidArgument, "step_kld_mc needs at least 2 draws");
  const auto star = model.at(theta_star);
  const auto alt = model.at(theta);
  if (!star->has_stationary())
    throw Error(ErrorCode::kNoStationarySampler, "step_kld_mc needs a stationary sampler for theta*");
  const auto r = detail::mc_mean(draws, seed, 1, [&](Rng& rng) {
    const StateObs z0 = star->sample_stationary(rng);
    const auto gs = star->gaussian_step(z0);
    const auto ga = alt->gaussian_step(z0);
    if (gs && ga) return gaussian_kl(*gs, *ga);
    const StateObs z1 = star->sample(z0, rng);
    const double ls = star->logdensity(z0, z1);
    const double la = alt->logdensity(z0, z1);
    if (la == kNegInf) return kInf;
    return ls - la;
  });
  return from_mc(r);
}

KldEstimate delta_glm_closed(const GlmParams& star, const GlmParams& theta) {
  star.validate();
  theta.validate();
  if (star.p != theta.p || star.q != theta.q)
    throw Error(ErrorCode::kDimensionMismatch, "parameters live on different spaces");
  KldEstimate out;
  if (star.Phi == theta.Phi && star.R == theta.R) return out;
  const auto d = static_cast<double>(star.p + star.q);
  const auto lr = checked_llt(theta.R, "R");
  const auto lrs = checked_llt(star.R, "R*");
  const Mat gamma_star = glm_stationary_cov(star);
  const Mat D = theta.Phi - star.Phi;
  const double t1 = lr.solve(star.R).trace();
  const double t2 = lr.solve(D * gamma_star * D.transpose()).trace();
  const double log_det_ratio = log_det_spd(lrs) - log_det_spd(lr);
  out.value = 0.5 * (t1 - d - log_det_ratio + t2);
  return out;
}

KldEstimate delta_sv_closed(const SvParams& star, const SvParams& theta, std::size_t draws,
                            std::uint64_t seed) {
  SvKernel ks(star);
  SvKernel kt(theta);
  KldEstimate out;
  if (star.beta == theta.beta && star.sigma == theta.sigma && star.phi == theta.phi) return out;
  const double s2s = star.sigma * star.sigma, s2 = theta.sigma * theta.sigma;
  const double b2s = star.beta * star.beta, b2 = theta.beta * theta.beta;
  const double c0 = std::log(theta.sigma * theta.beta / (star.sigma * star.beta));
  const double a_x1sq = 0.5 * (1.0 / s2 - 1.0 / s2s);
  const double a_x0x1 = star.phi / s2s - theta.phi / s2;
  const double a_x0sq = 0.5 * (theta.phi * theta.phi / s2 - star.phi * star.phi / s2s);
  const double a_y = 0.5 * (1.0 / b2 - 1.0 / b2s);
  if (draws == 0) {
    const double v = ks.stationary_variance();
    out.value = c0 + a_x1sq * v + a_x0x1 * star.phi * v + a_x0sq * v + a_y * b2s;
    return out;
  }
  const auto r = detail::mc_mean(draws, seed, 2, [&](Rng& rng) {
    const double x0 = ks.sample_stationary_state(rng)(0);
    const double x1 = ks.sample_state(Vec::Constant(1, x0), rng)(0);
    const double y1 = ks.sample_emission(Vec::Constant(1, x1), rng)(0);
    return c0 + a_x1sq * x1 * x1 + a_x0x1 * x0 * x1 + a_x0sq * x0 * x0 +
           a_y * y1 * y1 * std::exp(-x1);
  });
  return from_mc(r);
}

namespace {

// Burn-in used when a kernel has no exact stationary state sampler.
constexpr std::size_t kBurnIn = 1000;

Vec stationary_state_draw(const HmmKernel& hmm, std::size_t state_dim, Rng& rng) {
  if (hmm.has_stationary_state()) return hmm.sample_stationary_state(rng);
  Vec x = Vec::Zero(static_cast<Eigen::Index>(state_dim));
  for (std::size_t i = 0; i < kBurnIn; ++i) x = hmm.sample_state(x, rng);
  return x;
}

}  // namespace

KldEstimate delta_bar_hmm(const Model& model, const ParamPoint& theta_star,
                          const ParamPoint& theta, std::size_t draws, std::uint64_t seed) {
  const auto star = model.at(theta_star);
  const auto alt = model.at(theta);
  const HmmKernel* hs = star->hmm();
  const HmmKernel* ha = alt->hmm();
  if (!hs || !ha) throw Error(ErrorCode::kUnsupported, "delta_bar_hmm needs an HMM factorization");

  const auto* fs = dynamic_cast<const FiniteHmmKernel*>(star.get());
  const auto* fa = dynamic_cast<const FiniteHmmKernel*>(alt.get());
  if (fs && fa) {
    const Mat& Gs = fs->params().G;
    const Mat& Ga = fa->params().G;
    const Vec& ps = fs->stationary();
    const Vec& pa = fa->stationary();
    KldEstimate out;
    double total = 0.0;
    for (Eigen::Index x = 0; x < Gs.rows(); ++x) {
      for (Eigen::Index xp = 0; xp < Ga.rows(); ++xp) {
        const double w = ps(x) * pa(xp);
        if (w == 0.0) continue;
        double kl = 0.0;
        for (Eigen::Index y = 0; y < Gs.cols(); ++y) {
          if (Gs(x, y) == 0.0) continue;
          if (Ga(xp, y) == 0.0) {
            out.value = kInf;
            out.infinite = true;
            return out;
          }
          kl += Gs(x, y) * (std::log(Gs(x, y)) - std::log(Ga(xp, y)));
        }
        total += w * kl;
      }
    }
    out.value = total;
    return out;
  }

  if (draws < 2) throw Error(ErrorCode::kInvalidArgument, "delta_bar_hmm needs at least 2 draws");
  const std::size_t sdim = model.state_dim();
  const auto r = detail::mc_mean(draws, seed, 3, [&](Rng& rng) {
    const Vec x = stationary_state_draw(*hs, sdim, rng);
    const Vec xp = stationary_state_draw(*ha, sdim, rng);
    const auto gs = hs->emission_gaussian(x);
    const auto ga = ha->emission_gaussian(xp);
    if (gs && ga) return gaussian_kl(*gs, *ga);
    const Vec y = hs->sample_emission(x, rng);
    const double la = ha->emission_logdensity(xp, y);
    if (la == kNegInf) return kInf;
    return hs->emission_logdensity(x, y) - la;
  });
  return from_mc(r);
}

KldEstimate delta(const Model& model, const ParamPoint& theta_star, const ParamPoint& theta,
                  std::size_t draws, std::uint64_t seed) {
  const auto star = model.at(theta_star);
  const auto alt = model.at(theta);
  const auto* gs = dynamic_cast<const GaussianLinearKernel*>(star.get());
  const auto* ga = dynamic_cast<const GaussianLinearKernel*>(alt.get());
  if (gs && ga) return delta_glm_closed(gs->params(), ga->params());
  const auto* ss = dynamic_cast<const SvKernel*>(star.get());
  const auto* sa = dynamic_cast<const SvKernel*>(alt.get());
  if (ss && sa) return delta_sv_closed(ss->params(), sa->params());
  return step_kld_mc(model, theta_star, theta, draws, seed);
}

std::vector<DensenessRow> information_denseness_profile(const ParamGrid& grid,
                                                        const std::vector<double>& divergences,
                                                        const std::vector<double>& deltas) {
  grid.validate();
  if (divergences.size() != grid.size())
    throw Error(ErrorCode::kDimensionMismatch, "one divergence per grid point required");
  std::vector<DensenessRow> rows;
  rows.reserve(deltas.size());
  for (double d : deltas) {
    DensenessRow row;
    row.delta = d;
    for (std::size_t i = 0; i < grid.size(); ++i)
      if (divergences[i] <= d) row.prior_mass += grid.prior_weight[i];
    row.zero_mass = !(row.prior_mass > 0.0);
    rows.push_back(row);
  }
  return rows;
}

std::vector<DensenessRow> information_denseness_profile(const Model& model, const ParamGrid& grid,
                                                        const ParamPoint& theta_star,
                                                        const std::vector<double>& deltas,
                                                        DivergenceKind which, std::size_t draws,
                                                        std::uint64_t seed) {
  std::vector<double> div(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    const std::uint64_t s = mix64(seed ^ (0x9e37ull * (i + 1)));
    div[i] = which == DivergenceKind::kDelta
                 ? delta(model, theta_star, grid.points[i], draws, s).value
                 : delta_bar_hmm(model, theta_star, grid.points[i], draws, s).value;
  });
  return information_denseness_profile(grid, div, deltas);
}

void write_denseness_csv(std::ostream& os, const std::vector<DensenessRow>& rows) {
  os << "delta,prior_mass,flag\n" << std::setprecision(17);
  for (const auto& r : rows)
    os << r.delta << ',' << r.prior_mass << ',' << (r.zero_mass ? "zero_mass" : "ok") << '\n';
}

}  // namespace fdpomm
