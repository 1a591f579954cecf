#include <cmath>
#include <set>

#include "doctest.h"
#include "fdpomm/error.hpp"
#include "fdpomm/model_core.hpp"
#include "fdpomm/models.hpp"
#include "fdpomm/parallel.hpp"
#include "oracles.hpp"

using namespace fdpomm;

namespace {

GlmParams white_noise(std::size_t p, std::size_t q) {
  const auto d = static_cast<Eigen::Index>(p + q);
  return GlmParams{Mat::Zero(d, d), Mat::Identity(d, d), p, q};
}

FiniteHmmParams small_finite() {
  Mat P(2, 2), G(2, 3);
  P << 0.7, 0.3, 0.2, 0.8;
  G << 0.5, 0.3, 0.2, 0.1, 0.1, 0.8;
  return {P, G};
}

}  // namespace

TEST_CASE("rng is a pure function of seed and stream") {
  Rng a(42, 3), b(42, 3), c(42, 4), d(43, 3);
  for (int i = 0; i < 100; ++i) {
    const auto va = a();
    CHECK(va == b());
    CHECK(va != c());
    CHECK(va != d());
  }
  Rng u(1);
  double lo = 1.0, hi = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double x = u.uniform();
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  CHECK(lo > 0.0);
  CHECK(hi < 1.0);
}

TEST_CASE("substreams do not collide") {
  Rng root(7);
  std::set<std::uint64_t> first;
  for (std::uint64_t id = 0; id < 1000; ++id) first.insert(root.substream(id)());
  CHECK(first.size() == 1000);
}

TEST_CASE("parameter distance is Euclidean") {
  ParamSpace space(2);
  CHECK(param_distance(space, ParamPoint{0, 0}, ParamPoint{3, 4}) == doctest::Approx(5.0));
  const ParamPoint t{1.5, -2.0};
  CHECK(param_distance(space, t, t) == 0.0);
  Rng rng(11);
  for (int i = 0; i < 100; ++i) {
    const ParamPoint a{rng.normal(), rng.normal()}, b{rng.normal(), rng.normal()},
        c{rng.normal(), rng.normal()};
    CHECK(param_distance(space, a, b) == param_distance(space, b, a));
    CHECK(param_distance(space, a, c) <= param_distance(space, a, b) + param_distance(space, b, c) + 1e-15);
  }
  CHECK_THROWS_AS(param_distance(space, ParamPoint{0, 0}, ParamPoint{0, 0, 0}), Error);
}

TEST_CASE("parameter space rejects inverted bounds") {
  CHECK_THROWS_AS(ParamSpace(Vec::Constant(1, 1.0), Vec::Constant(1, 0.0)), Error);
  ParamSpace box(Vec::Constant(1, -1.0), Vec::Constant(1, 1.0));
  CHECK(box.contains(ParamPoint{0.5}));
  CHECK_FALSE(box.contains(ParamPoint{1.5}));
}

TEST_CASE("point mass start and trajectory length") {
  auto model = glm_spec(1, 1);
  const ParamPoint theta = glm_point(white_noise(1, 1));
  StateObs z0{Vec::Constant(1, 2.5), Vec::Constant(1, -1.0)};
  const Trajectory t = simulate_complete(*model, theta, InitialDist::point_mass(z0), 1, 5);
  REQUIRE(t.size() == 2);
  CHECK(t.z[0].x(0) == 2.5);
  CHECK(t.z[0].y(0) == -1.0);
}

TEST_CASE("simulation is deterministic given the seed") {
  auto model = sv_spec();
  const ParamPoint theta = sv_point({1.0, 0.5, 0.9});
  const auto a = simulate_complete(*model, theta, InitialDist::stationary(), 200, 99);
  const auto b = simulate_complete(*model, theta, InitialDist::stationary(), 200, 99);
  const auto c = simulate_complete(*model, theta, InitialDist::stationary(), 200, 100);
  bool differs = false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a.z[k].x(0) == b.z[k].x(0));
    CHECK(a.z[k].y(0) == b.z[k].y(0));
    differs = differs || a.z[k].y(0) != c.z[k].y(0);
  }
  CHECK(differs);
}

TEST_CASE("white noise chain has identity stationary covariance") {
  auto model = glm_spec(1, 1);
  const auto t = simulate_complete(*model, glm_point(white_noise(1, 1)), InitialDist::stationary(),
                                   100000, 2024);
  double sxx = 0, syy = 0, sxy = 0;
  const double n = static_cast<double>(t.size());
  for (const auto& z : t.z) {
    sxx += z.x(0) * z.x(0);
    syy += z.y(0) * z.y(0);
    sxy += z.x(0) * z.y(0);
  }
  // SE of a second moment of a standard normal is sqrt(2 / n); of a cross moment 1 / sqrt(n).
  CHECK(std::abs(sxx / n - 1.0) < 3.0 * std::sqrt(2.0 / n));
  CHECK(std::abs(syy / n - 1.0) < 3.0 * std::sqrt(2.0 / n));
  CHECK(std::abs(sxy / n) < 3.0 / std::sqrt(n));
}

TEST_CASE("projected observations drop z0") {
  auto model = glm_spec(1, 1);
  const auto t = simulate_complete(*model, glm_point(white_noise(1, 1)), InitialDist::stationary(), 2, 3);
  REQUIRE(t.size() == 3);
  const ObsSeq y = project_observations(t);
  REQUIRE(y.size() == 2);
  for (std::size_t k = 1; k <= 2; ++k) CHECK(y.y[k - 1](0) == t.z[k].y(0));

  Trajectory single;
  single.z.push_back(t.z[0]);
  CHECK_THROWS_AS(project_observations(single), Error);
}

TEST_CASE("stationary observation moments are stable across windows") {
  auto model = ssm_scalar_family(1.0, 1.0, 0.1);
  const auto y = project_observations(
      simulate_complete(*model, ParamPoint{0.5}, InitialDist::stationary(), 40000, 8));
  // Var(Y) = 4/3 + 0.1 under the stationary law.
  for (int w = 0; w < 4; ++w) {
    double s2 = 0;
    for (int k = 0; k < 10000; ++k) s2 += y.y[static_cast<std::size_t>(w * 10000 + k)](0) * y.y[static_cast<std::size_t>(w * 10000 + k)](0);
    CHECK(s2 / 10000.0 == doctest::Approx(4.0 / 3.0 + 0.1).epsilon(0.08));
  }
}

TEST_CASE("stationary start without a sampler is an explicit error") {
  class NoStationary final : public Kernel {
   public:
    std::size_t state_dim() const override { return 1; }
    std::size_t obs_dim() const override { return 1; }
    double logdensity(const StateObs&, const StateObs&) const override { return 0.0; }
    StateObs sample(const StateObs& from, Rng&) const override { return from; }
  };
  auto model = make_family("bare", 1, 1, ParamSpace(1),
                           [](const ParamPoint&) { return std::make_shared<NoStationary>(); });
  try {
    simulate_complete(*model, ParamPoint{0.0}, InitialDist::stationary(), 3, 1);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNoStationarySampler);
  }
}

TEST_CASE("finite kernel normalizes and ignores the source observation") {
  auto model = finite_hmm_spec(small_finite());
  const auto kernel = model->at(finite_point(small_finite()));
  for (int x = 0; x < 2; ++x) {
    double total = 0.0;
    for (int x1 = 0; x1 < 2; ++x1)
      for (int y1 = 0; y1 < 3; ++y1)
        total += std::exp(kernel->logdensity({Vec::Constant(1, x), Vec::Constant(1, 0)},
                                             {Vec::Constant(1, x1), Vec::Constant(1, y1)}));
    CHECK(std::abs(total - 1.0) < 1e-12);
    for (int y = 1; y < 3; ++y)
      CHECK(kernel->logdensity({Vec::Constant(1, x), Vec::Constant(1, 0)}, {Vec::Constant(1, 1), Vec::Constant(1, 2)}) ==
            kernel->logdensity({Vec::Constant(1, x), Vec::Constant(1, y)}, {Vec::Constant(1, 1), Vec::Constant(1, 2)}));
  }
}

TEST_CASE("hmm factorization matches the joint density for the SSM") {
  auto model = ssm_scalar_family(1.0, 1.0, 0.1);
  const auto kernel = model->at(ParamPoint{0.3});
  const HmmKernel* h = kernel->hmm();
  REQUIRE(h != nullptr);
  const StateObs from{Vec::Constant(1, 0.4), Vec::Constant(1, 1.0)};
  const StateObs from2{Vec::Constant(1, 0.4), Vec::Constant(1, -7.0)};
  const StateObs to{Vec::Constant(1, -0.2), Vec::Constant(1, 0.5)};
  const double joint = kernel->logdensity(from, to);
  CHECK(joint == doctest::Approx(h->state_logdensity(from.x, to.x) + h->emission_logdensity(to.x, to.y)).epsilon(1e-13));
  CHECK(joint == kernel->logdensity(from2, to));
}

TEST_CASE("log-sum-exp handles empty and infinite input") {
  CHECK(log_sum_exp(std::vector<double>{}) == kNegInf);
  CHECK(log_sum_exp(std::vector<double>{kNegInf, kNegInf}) == kNegInf);
  CHECK(log_sum_exp(std::vector<double>{1000.0, 1000.0}) == doctest::Approx(1000.0 + std::log(2.0)));
}

TEST_CASE("parallel_for gives thread-count independent results") {
  std::vector<double> a(1000), b(1000);
  parallel_for(1000, [&](std::size_t i) { a[i] = Rng(5, i).normal(); }, 1);
  parallel_for(1000, [&](std::size_t i) { b[i] = Rng(5, i).normal(); }, 7);
  CHECK(a == b);
  CHECK_THROWS(parallel_for(10, [](std::size_t i) { if (i == 3) throw Error(ErrorCode::kValidation, "x"); }, 4));
}
