#ifndef FDPOMM_EXPERIMENT_HPP_
#define FDPOMM_EXPERIMENT_HPP_

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "fdpomm/audit.hpp"
#include "fdpomm/config.hpp"
#include "fdpomm/grid.hpp"
#include "fdpomm/likelihood.hpp"
#include "fdpomm/model_core.hpp"
#include "fdpomm/posterior.hpp"

namespace fdpomm {

struct ModelSetup {
  std::string family;
  ModelPtr model;
  ParamPoint theta_star;
};

// Reads the [model] section. Families: ssm1, ssm, glm, sv, finite, iid.
ModelSetup build_model(const Config& cfg);

// Reads <prefix> ("stationary", "point_mass", "gaussian") and its companion
// keys <prefix>_x, <prefix>_y, <prefix>_mean, <prefix>_cov from a section.
InitialDist build_init(const Config& cfg, const std::string& section, const std::string& prefix,
                       const Model& model);

// Parses "a,b,c" into a parameter point.
ParamPoint parse_point(const std::string& text);

struct ExperimentConfig {
  Config raw;
  ModelSetup setup;
  std::vector<std::size_t> ns;
  std::uint64_t seed = 0;
  InitialDist truth_init;
  InitialDist inference_init;
  LikOptions lik;
  ParamGrid grid;
  std::string sampler = "grid";  // grid | mh
  MhOptions mh;
  std::vector<int> ps;
  std::string out_dir = "out";
  std::vector<std::string> audits;
  bool write_posteriors = true;

  static ExperimentConfig from_config(const Config& cfg);
};

struct ExperimentResult {
  ObsSeq observations;
  std::vector<PosteriorGrid> posteriors;
  std::vector<ConcentrationRow> concentration;
  std::vector<AuditReport> audits;
  std::vector<std::string> files;
  std::uint64_t config_hash = 0;
  std::vector<std::string> notes;
  MhResult mh;
};

// CSV with header k,y_0,...; one row per observation, 17 significant digits.
void write_observations_csv(std::ostream& os, const ObsSeq& obs, std::size_t obs_dim);
ObsSeq read_observations_csv(const std::string& path);

// Simulates one trajectory up to max n under the truth's initial law,
// computes posteriors on every prefix, and writes tables when write_files.
ExperimentResult run_experiment(const ExperimentConfig& cfg, bool write_files = true);

}  // namespace fdpomm

#endif  // FDPOMM_EXPERIMENT_HPP_
