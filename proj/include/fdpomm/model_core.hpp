#ifndef FDPOMM_MODEL_CORE_HPP_
#define FDPOMM_MODEL_CORE_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "fdpomm/rng.hpp"

namespace fdpomm {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

//----------------------------------------------------------------------
// Parameter space.

struct ParamPoint {
  Vec coords;

  ParamPoint() = default;
  explicit ParamPoint(Vec c) : coords(std::move(c)) {}
  ParamPoint(std::initializer_list<double> c);

  std::size_t dim() const { return static_cast<std::size_t>(coords.size()); }
  double operator[](std::size_t i) const { return coords(static_cast<Eigen::Index>(i)); }
  bool operator==(const ParamPoint& other) const;
};

// Box-constrained subset of R^d with the Euclidean metric.
class ParamSpace {
 public:
  explicit ParamSpace(std::size_t dims);
  ParamSpace(Vec lower, Vec upper);

  std::size_t dims() const { return static_cast<std::size_t>(lower_.size()); }
  const Vec& lower() const { return lower_; }
  const Vec& upper() const { return upper_; }

  bool contains(const ParamPoint& p) const;
  double distance(const ParamPoint& a, const ParamPoint& b) const;

 private:
  Vec lower_;
  Vec upper_;
};

double param_distance(const ParamSpace& space, const ParamPoint& a,
                      const ParamPoint& b);

//----------------------------------------------------------------------
// Chains.

// One element z = (x, y) of the state-observation space. Finite-alphabet
// models store the state index in x(0) and the symbol in y(0).
struct StateObs {
  Vec x;
  Vec y;
};

struct Trajectory {
  std::vector<StateObs> z;  // z[0..n]
  std::size_t size() const { return z.size(); }
};

// y_1..y_n. Index 0 of the vector holds y_1.
struct ObsSeq {
  std::vector<Vec> y;

  std::size_t size() const { return y.size(); }
  bool empty() const { return y.empty(); }
  ObsSeq prefix(std::size_t n) const;
  static ObsSeq scalar(const std::vector<double>& values);
};

struct GaussianLaw {
  Vec mean;
  Mat cov;
};

// Initial distribution on Z.
struct Stationary {};
struct PointMass {
  StateObs z;
};
struct GaussianOnZ {
  Vec mean;  // over (x, y) stacked
  Mat cov;
};
struct CustomInit {
  std::function<StateObs(Rng&)> sample;
  std::function<double(const StateObs&)> logdensity;
};

class InitialDist {
 public:
  using Kind = std::variant<Stationary, PointMass, GaussianOnZ, CustomInit>;

  InitialDist() : kind_(Stationary{}) {}
  InitialDist(Kind kind) : kind_(std::move(kind)) {}

  static InitialDist stationary() { return InitialDist(Stationary{}); }
  static InitialDist point_mass(StateObs z) { return InitialDist(PointMass{std::move(z)}); }
  static InitialDist gaussian(Vec mean, Mat cov);

  const Kind& kind() const { return kind_; }
  bool is_stationary() const { return std::holds_alternative<Stationary>(kind_); }
  const PointMass* point_mass() const { return std::get_if<PointMass>(&kind_); }
  const GaussianOnZ* gaussian() const { return std::get_if<GaussianOnZ>(&kind_); }
  const CustomInit* custom() const { return std::get_if<CustomInit>(&kind_); }

 private:
  Kind kind_;
};

//----------------------------------------------------------------------
// Kernels and model families.

// HMM factorization q(z, z') = qX(x, x') g(x', y').
class HmmKernel {
 public:
  virtual ~HmmKernel() = default;

  virtual double state_logdensity(const Vec& x, const Vec& x_next) const = 0;
  virtual Vec sample_state(const Vec& x, Rng& rng) const = 0;
  virtual double emission_logdensity(const Vec& x, const Vec& y) const = 0;
  virtual Vec sample_emission(const Vec& x, Rng& rng) const = 0;

  // Present when g(x, .) is a Gaussian law.
  virtual std::optional<GaussianLaw> emission_gaussian(const Vec&) const {
    return std::nullopt;
  }
  virtual bool has_stationary_state() const { return false; }
  virtual Vec sample_stationary_state(Rng& rng) const;
};

// The transition q_theta for one fixed parameter value. Immutable and
// reentrant.
class Kernel {
 public:
  virtual ~Kernel() = default;

  virtual std::size_t state_dim() const = 0;
  virtual std::size_t obs_dim() const = 0;

  // log q(from, to); -inf encodes zero density.
  virtual double logdensity(const StateObs& from, const StateObs& to) const = 0;
  virtual StateObs sample(const StateObs& from, Rng& rng) const = 0;

  virtual bool has_stationary() const { return false; }
  virtual StateObs sample_stationary(Rng& rng) const;
  // Stationary density on Z w.r.t. the dominating product measure.
  virtual double stationary_logdensity(const StateObs& z) const;
  // Stationary law of X when the state is scalar: (mean, sd).
  virtual std::optional<std::pair<double, double>> stationary_state_moments() const {
    return std::nullopt;
  }

  // Law of z' given z when jointly Gaussian.
  virtual std::optional<GaussianLaw> gaussian_step(const StateObs&) const {
    return std::nullopt;
  }

  // True when q(z, .) does not depend on the y-component of z.
  virtual bool ignores_source_obs() const { return false; }

  virtual const HmmKernel* hmm() const { return nullptr; }
};

class Model {
 public:
  virtual ~Model() = default;

  virtual std::string family() const = 0;
  virtual std::size_t state_dim() const = 0;
  virtual std::size_t obs_dim() const = 0;
  virtual ParamSpace param_space() const = 0;

  // Validates theta and returns the bound kernel.
  virtual std::shared_ptr<const Kernel> at(const ParamPoint& theta) const = 0;

  double transition_logdensity(const ParamPoint& theta, const StateObs& from,
                               const StateObs& to) const {
    return at(theta)->logdensity(from, to);
  }
};

using ModelPtr = std::shared_ptr<const Model>;

//----------------------------------------------------------------------
// Simulation.

StateObs sample_initial(const Kernel& kernel, const InitialDist& init, Rng& rng);

// z_0 ~ init, z_{k+1} ~ q_theta(z_k, .), k < n. Returns n + 1 entries.
Trajectory simulate_complete(const Model& model, const ParamPoint& theta,
                             const InitialDist& init, std::size_t n,
                             std::uint64_t seed, std::uint64_t stream = 0);

ObsSeq project_observations(const Trajectory& traj);

// log(sum(exp(v))) with max subtraction; -inf for empty or all -inf input.
double log_sum_exp(const std::vector<double>& v);
double log_sum_exp(const Vec& v);

double gaussian_logdensity(const Vec& x, const Vec& mean, const Eigen::LLT<Mat>& cov_llt);
double gaussian_logdensity(double x, double mean, double var);

}  // namespace fdpomm

#endif  // FDPOMM_MODEL_CORE_HPP_
