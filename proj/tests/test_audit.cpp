#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "doctest.h"
#include "fdpomm/audit.hpp"
#include "fdpomm/error.hpp"
#include "fdpomm/models.hpp"
#include "json.hpp"
#include "oracles.hpp"

using namespace fdpomm;

namespace {

Mat m2(double a, double b, double c, double d) {
  Mat m(2, 2);
  m << a, b, c, d;
  return m;
}

}  // namespace

TEST_CASE("first SV envelope at a closed-form point") {
  SvRegion r;
  r.sigma_min = 1.0;
  r.phi_max = 0.0;
  const auto parts = psup_sv_log_bound(r, {0.3, 1.0, 1.0});
  CHECK(std::exp(parts.log_bound1) == doctest::Approx(1.0 / (2.0 * oracle::kPi * std::sqrt(std::exp(1.0)))).epsilon(1e-14));
  CHECK(std::exp(parts.log_bound1) == doctest::Approx(0.09653).epsilon(1e-4));
  CHECK(psup_sv_bound(r, {0.3, 1.0, 1.0}) <= std::exp(parts.log_bound1) * (1 + 1e-15));
}

TEST_CASE("envelopes with a zero observation") {
  SvRegion r;
  r.sigma_max = 2.0;
  r.log_beta_max = std::log(5.0);
  CHECK_THROWS_AS(psup_sv_log_bound(r, {0.0, 0.0, 1.0}), Error);
  CHECK_THROWS_AS(psup_sv_bound(r, {0.0, 0.0, 1.0}), Error);
  // y2 = 0 kills only the first envelope.
  const auto parts = psup_sv_log_bound(r, {0.0, 1.0, 0.0});
  CHECK(parts.log_bound1 == std::numeric_limits<double>::infinity());
  CHECK(std::isfinite(parts.log_bound2));
}

TEST_CASE("envelope is monotone in the region") {
  Rng rng(8);
  for (int rep = 0; rep < 50; ++rep) {
    SvRegion small;
    small.sigma_min = 0.5 + rng.uniform();
    small.sigma_max = small.sigma_min + rng.uniform();
    small.log_beta_min = rng.normal();
    small.log_beta_max = small.log_beta_min + rng.uniform();
    small.phi_max = 0.5 * rng.uniform();
    SvRegion big = small;
    big.sigma_min *= 0.5;
    big.sigma_max += 1.0;
    big.log_beta_min -= 1.0;
    big.log_beta_max += 1.0;
    big.phi_max += 0.3;
    const std::array<double, 3> y{rng.normal(), rng.normal(), rng.normal()};
    const auto a = psup_sv_log_bound(small, y), b = psup_sv_log_bound(big, y);
    CHECK(b.log_bound1 >= a.log_bound1);
    CHECK(b.log_bound2 >= a.log_bound2 - 1e-12);
    CHECK(b.log_bound() >= a.log_bound() - 1e-12);
  }
}

TEST_CASE("complement bound shrinks with m") {
  // The large-beta piece carries e^{sigma^2/8} with sigma^2 up to log m, so
  // the envelope only starts to fall once e^{-(1 - phi_max) m} dominates.
  const SvBounds bounds;
  const std::array<double, 3> y{0.4, -1.3, 0.8};
  double previous = std::numeric_limits<double>::infinity();
  for (double m : {100.0, 1000.0, 10000.0}) {
    const double v = psup_sv_cm_complement_log(bounds, m, y);
    CHECK(v < previous);
    previous = v;
  }
  previous = std::numeric_limits<double>::infinity();
  for (double m : {10.0, 100.0, 1000.0}) {
    const double v = psup_sv_log_bound(sv_cm_complement(bounds, m)[0], y).log_bound();
    CHECK(v < previous);
    previous = v;
  }
  const auto regions = sv_cm_complement(bounds, 100.0);
  CHECK(regions[0].sigma_min == doctest::Approx(std::sqrt(std::log(100.0))));
  CHECK(regions[1].log_beta_min == doctest::Approx(100.0));
}

TEST_CASE("envelope dominates the quadrature density") {
  SvRegion r;
  r.sigma_min = 0.2;
  r.sigma_max = 2.0;
  r.log_beta_min = std::log(0.2);
  r.log_beta_max = std::log(3.0);
  r.phi_max = 0.95;
  const auto check = sv_envelope_check(r, 500, 4);
  CHECK(check.draws == 500);
  CHECK(check.violations == 0);
  CHECK(check.max_excess <= 1e-9);

  SvRegion open;
  CHECK_THROWS_AS(sv_envelope_check(open, 10, 1), Error);
}

TEST_CASE("block density integrates the path") {
  // D at phi = 0 factorizes: int qX(x0,x1) g(x1,y1) dx1 * int qX(x1,x2) g(x2,y2) dx2,
  // where both integrals see X ~ N(0, sigma^2) independent of x0.
  const SvParams t{1.0, 0.5, 0.0};
  SvKernel k(t);
  auto marginal = [&](double y) {
    const int n = 20001;
    const double h = 20.0 * t.sigma / (n - 1);
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = -10 * t.sigma + i * h;
      s += (i == 0 || i == n - 1 ? 0.5 : 1.0) * std::exp(oracle::normal_logpdf(x, 0, t.sigma * t.sigma) + k.log_g(x, y));
    }
    return s * h;
  };
  const double expect = marginal(0.7) * marginal(-1.1);
  CHECK(sv_block_density(t, 2.0, {5.0, 0.7, -1.1}, 401) == doctest::Approx(expect).epsilon(1e-8));
}

TEST_CASE("B5 audit reports") {
  const SvParams star{1.0, 0.5, 0.5};
  const auto a = tightness_audit_sv(star, SvBounds{}, {10, 100, 1000}, 2000, 3);
  CHECK(a[0].assumption == "B5.conv");
  CHECK(a[1].assumption == "B5.logmoment");
  CHECK(a[0].status == AuditStatus::kEstimate);
  CHECK(a[1].status == AuditStatus::kEstimate);
  REQUIRE(a[1].ci_lo.has_value());
  CHECK(std::isfinite(a[1].statistic));
  CHECK(*a[1].ci_hi - *a[1].ci_lo > 0.0);

  const auto b = tightness_audit_sv(star, SvBounds{}, {10, 100, 1000}, 2000, 3);
  CHECK(a[0].to_json() == b[0].to_json());
  CHECK(a[1].to_json() == b[1].to_json());
}

TEST_CASE("B5 log moment is precise at large sample size") {
  const auto a = tightness_audit_sv({1.0, 0.5, 0.5}, SvBounds{}, {1000}, 100000, 11);
  CHECK(*a[1].ci_hi - *a[1].ci_lo < 0.1);
}

TEST_CASE("B6 audits") {
  const SvParams star{1.0, 0.5, 0.5};
  const SvBounds bounds;
  SvPrior proper{[](const SvParams& t) { return std::exp(-t.beta - t.sigma) / (2 * 0.999); }, true};
  const auto ok = b6_audit(star, bounds, proper, 20000, 5);
  CHECK(ok[0].assumption == "B6.1");
  CHECK(ok[0].status == AuditStatus::kPass);
  CHECK(ok[1].assumption == "B6.2");
  const double se = (*ok[1].ci_hi - *ok[1].ci_lo) / (2 * 1.96);
  CHECK(ok[1].statistic >= sv_jensen_bound_independent(star) - 3.0 * se);
  // E[log p(Y_1)] <= E[log g(X_1, Y_1)] since the gap is a mutual information.
  CHECK(ok[1].statistic <= sv_jensen_bound(star) + 3.0 * se);

  SvPrior flat{[](const SvParams&) { return 1.0; }, false};
  CHECK(b6_audit(star, bounds, flat, 200, 5)[0].status == AuditStatus::kFail);

  SvPrior missing{nullptr, false};
  CHECK_THROWS_AS(b6_audit(star, bounds, missing, 10, 5), Error);
}

TEST_CASE("Jensen bound value") {
  CHECK(sv_jensen_bound({1.0, 0.5, 0.5}) == doctest::Approx(-0.5 * std::log(2 * oracle::kPi) - 0.5).epsilon(1e-15));
  CHECK(sv_jensen_bound({1.0, 0.5, 0.5}) == doctest::Approx(-1.41894).epsilon(1e-5));
  CHECK(sv_jensen_bound_independent({1.0, 0.5, 0.5}) ==
        doctest::Approx(-0.5 * std::log(2 * oracle::kPi) - 0.5 * std::exp(1.0 / 3.0)).epsilon(1e-15));
}

TEST_CASE("log g moment by simulation") {
  // Oracle for the closed form: E[log g(X, Y)] with X, Y drawn jointly.
  const SvParams star{1.0, 0.5, 0.5};
  SvKernel k(star);
  Rng rng(77);
  double s = 0.0, s2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const Vec x = k.sample_stationary_state(rng);
    const double v = k.log_g(x(0), k.sample_emission(x, rng)(0));
    s += v;
    s2 += v * v;
  }
  const double mean = s / n, se = std::sqrt((s2 / n - mean * mean) / n);
  CHECK(std::abs(mean - sv_jensen_bound(star)) < 3.0 * se);
}

TEST_CASE("Kingman subadditivity on finite and SV envelopes") {
  const FiniteHmmParams a{m2(0.8, 0.2, 0.3, 0.7), m2(0.9, 0.1, 0.2, 0.8)};
  const FiniteHmmParams b{m2(0.6, 0.4, 0.1, 0.9), m2(0.7, 0.3, 0.4, 0.6)};
  auto model = finite_hmm_spec(2, 2);
  const ObsSeq obs = project_observations(simulate_complete(*model, finite_point(a), InitialDist::stationary(), 60, 2));
  const auto w = finite_hmm_log_w(*model, {finite_point(a), finite_point(b)}, obs);
  CHECK(w(5, 5) == 0.0);
  const auto triples = random_triples(60, 100, 9);
  for (const auto& t : triples) {
    CHECK(t.r <= t.s);
    CHECK(t.s <= t.t);
    CHECK(t.t <= 60);
  }
  const auto rep = kingman_check(w, triples);
  CHECK(rep.status == AuditStatus::kPass);
  CHECK(rep.statistic <= 1e-12);

  auto sv = sv_spec();
  const ObsSeq sv_obs = project_observations(simulate_complete(*sv, sv_point({1.0, 0.5, 0.5}), InitialDist::stationary(), 40, 2));
  CHECK(kingman_check(sv_envelope_log_w(SvBounds{}, sv_obs), random_triples(40, 100, 1)).status == AuditStatus::kPass);
}

TEST_CASE("Kingman negative control") {
  // log W_{r,t} = (t - r)^2 is superadditive and must be caught.
  LogWFunction bad = [](std::size_t r, std::size_t t) { return double((t - r) * (t - r)); };
  const auto rep = kingman_check(bad, {{0, 2, 5}, {1, 1, 1}});
  CHECK(rep.status == AuditStatus::kFail);
  CHECK(rep.statistic == doctest::Approx(25.0 - 4.0 - 9.0));
}

TEST_CASE("positivity audits") {
  auto glm = glm_spec(1, 1);
  const ParamPoint g = glm_point({Mat::Zero(2, 2), Mat::Identity(2, 2), 1, 1});
  CHECK(positivity_audit(*glm, {g}, PositivityKind::kB3, 200, 1).status == AuditStatus::kPass);

  auto sv = sv_spec();
  CHECK(positivity_audit(*sv, {sv_point({1.0, 0.5, 0.5})}, PositivityKind::kB3, 200, 1).status == AuditStatus::kPass);
  CHECK(positivity_audit(*sv, {sv_point({1.0, 0.5, 0.5})}, PositivityKind::kC2, 200, 1).status == AuditStatus::kPass);

  auto fin = finite_hmm_spec(2, 2);
  const ParamPoint zero_g = finite_point({m2(0.5, 0.5, 0.5, 0.5), m2(1.0, 0.0, 0.3, 0.7)});
  CHECK(positivity_audit(*fin, {zero_g}, PositivityKind::kC2, 0, 1).status == AuditStatus::kFail);
  const ParamPoint pos = finite_point({m2(0.5, 0.5, 0.5, 0.5), m2(0.9, 0.1, 0.3, 0.7)});
  CHECK(positivity_audit(*fin, {pos}, PositivityKind::kC2, 0, 1).status == AuditStatus::kPass);
}

TEST_CASE("report serialization") {
  AuditReport r;
  r.assumption = "B5.logmoment";
  r.status = AuditStatus::kEstimate;
  r.statistic = 0.1;
  r.ci_lo = 0.05;
  r.seed = 42;
  r.sims = 1000;
  const auto j = nlohmann::json::parse(r.to_json());
  CHECK(j["assumption"] == "B5.logmoment");
  CHECK(j["status"] == "estimate");
  CHECK(j["ci_lo"] == 0.05);
  CHECK(j["ci_hi"].is_null());
  CHECK(j["seed"] == 42);
  CHECK(j["sims"] == 1000);
  std::ostringstream os;
  write_jsonl(os, {r, r});
  const std::string text = os.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 2);
}
