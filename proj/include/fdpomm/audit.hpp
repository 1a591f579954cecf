#ifndef FDPOMM_AUDIT_HPP_
#define FDPOMM_AUDIT_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "fdpomm/model_core.hpp"
#include "fdpomm/models.hpp"

namespace fdpomm {

enum class AuditStatus { kPass, kFail, kEstimate };
const char* to_string(AuditStatus s);

struct AuditReport {
  std::string assumption;  // B1, B3, B4, B5.conv, B5.logmoment, B6.1, B6.2, C2, C3, Kingman, ...
  AuditStatus status = AuditStatus::kEstimate;
  double statistic = 0.0;
  std::optional<double> ci_lo;
  std::optional<double> ci_hi;
  std::uint64_t seed = 0;
  std::size_t sims = 0;
  std::string detail;

  std::string to_json() const;
};

void write_jsonl(std::ostream& os, const std::vector<AuditReport>& reports);

//----------------------------------------------------------------------
// Stochastic volatility envelopes.

// Box in SV coordinates. beta bounds are kept on the log scale so that
// regions such as beta > e^1000 stay representable.
struct SvRegion {
  double sigma_min = 1e-3;
  double sigma_max = std::numeric_limits<double>::infinity();
  double log_beta_min = std::log(1e-3);
  double log_beta_max = std::numeric_limits<double>::infinity();
  double phi_max = 0.999;

  static SvRegion point(const SvParams& p);
};

struct SvBoundParts {
  double log_bound1 = 0.0;  // from sup q_X * int g * sup g
  double log_bound2 = 0.0;  // from the sup over x_1 after integrating x_2
  double log_bound() const { return std::min(log_bound1, log_bound2); }
};

// Both envelopes of sup_{theta in region, x_0} D_{theta,x_0}(y_{0:2}), each
// maximized over the region, on the log scale. Throws kInvalidArgument when
// both are infinite.
SvBoundParts psup_sv_log_bound(const SvRegion& region, const std::array<double, 3>& y);
double psup_sv_bound(const SvRegion& region, const std::array<double, 3>& y);

// The complement of C_m = {sigma^2 <= log m, beta <= e^m} within the box
// implied by bounds, as the union of two regions.
std::array<SvRegion, 2> sv_cm_complement(const SvBounds& bounds, double m);

// log psup over the complement of C_m.
double psup_sv_cm_complement_log(const SvBounds& bounds, double m, const std::array<double, 3>& y);

// D_{theta,x_0}(y_{0:2}) by nested trapezoid quadrature.
double sv_block_density(const SvParams& theta, double x0, const std::array<double, 3>& y,
                        std::size_t nodes = 201);

struct EnvelopeCheck {
  double max_excess = -std::numeric_limits<double>::infinity();  // max of D - bound
  std::size_t draws = 0;
  std::size_t violations = 0;  // D > bound + tol
};

// Random (theta in region, x_0, y) draws; every quadrature value of D is
// compared with the envelope evaluated at that theta alone, which never
// exceeds the envelope of the whole region.
EnvelopeCheck sv_envelope_check(const SvRegion& region, std::size_t draws, std::uint64_t seed,
                                double tol = 1e-9, std::size_t nodes = 201);

// B5.conv and B5.logmoment.
std::array<AuditReport, 2> tightness_audit_sv(const SvParams& star, const SvBounds& bounds,
                                              const std::vector<double>& m_list, std::size_t sims,
                                              std::uint64_t seed);

struct SvPrior {
  std::function<double(const SvParams&)> density;  // w.r.t. d beta d sigma d phi
  bool proper = true;
};

// B6.1 and B6.2 for the SV model. B6.2 uses n0 = 1 and quadrature for
// log p(Y_1).
std::array<AuditReport, 2> b6_audit(const SvParams& star, const SvBounds& bounds,
                                    const SvPrior& prior, std::size_t draws, std::uint64_t seed);

// -log(2 pi beta*^2)/2 - 1/2, which is E[log g(X_1, Y_1)] under the joint
// stationary law. It exceeds E[log p(Y_1)] by the mutual information of X_1
// and Y_1, so it bounds that expectation from above, not below.
double sv_jensen_bound(const SvParams& star);

// Jensen with the integration variable independent of Y_1:
// -log(2 pi beta*^2)/2 - exp(sigma^2 / (1 - phi^2)) / 2. A true lower bound.
double sv_jensen_bound_independent(const SvParams& star);

//----------------------------------------------------------------------
// Kingman subadditivity.

// log W_{r,t}; W_{r,r} = 1 by convention.
using LogWFunction = std::function<double(std::size_t r, std::size_t t)>;

struct Triple {
  std::size_t r, s, t;
};

std::vector<Triple> random_triples(std::size_t n, std::size_t count, std::uint64_t seed);

// Checks W_{r,t} <= W_{r,s} W_{s,t} for every triple; statistic is the
// largest violation log W_{r,t} - log W_{r,s} - log W_{s,t}.
AuditReport kingman_check(const LogWFunction& log_w, const std::vector<Triple>& triples,
                          double tol = 1e-12);

// Exact W for a finite HMM: sup over the listed parameters and x_r of the sum
// over x_{r+1:t} of prod_k P(x_{k-1}, x_k) G(x_k, y_k).
LogWFunction finite_hmm_log_w(const Model& model, const std::vector<ParamPoint>& thetas,
                              const ObsSeq& obs);

// SV envelope: the smallest product of block bounds over partitions of
// (r, t] into blocks of length one or two, over the box implied by bounds.
LogWFunction sv_envelope_log_w(const SvBounds& bounds, const ObsSeq& obs);

//----------------------------------------------------------------------
// Positivity.

enum class PositivityKind { kB3, kC2 };

// B3: q_theta(z, z') > 0; C2: g_theta(x, y) > 0. Finite models are checked
// exactly on their matrices; other models at random and extreme points.
AuditReport positivity_audit(const Model& model, const std::vector<ParamPoint>& thetas,
                             PositivityKind which, std::size_t samples, std::uint64_t seed);

}  // namespace fdpomm

#endif  // FDPOMM_AUDIT_HPP_
