#include "fdpomm/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "fdpomm/divergence.hpp"
#include "fdpomm/error.hpp"
#include "fdpomm/models.hpp"

namespace fdpomm {

namespace {

Vec to_vec(const std::vector<double>& v) {
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::size_t get_size(const Config& cfg, const std::string& section, const std::string& key,
                     std::int64_t fallback) {
  const auto v = cfg.get_int(section, key, fallback);
  if (v < 0) throw Error(ErrorCode::kConfig, "[" + section + "] " + key + " must be nonnegative");
  return static_cast<std::size_t>(v);
}

std::vector<double> get_doubles(const Config& cfg, const std::string& section,
                                const std::string& key) {
  try {
    return cfg.get(section, key).as_doubles();
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfig, "[" + section + "] " + key + ": " + e.what());
  }
}

}  // namespace

ParamPoint parse_point(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    char* end = nullptr;
    const double d = std::strtod(item.c_str(), &end);
    if (item.empty() || end == item.c_str())
      throw Error(ErrorCode::kInvalidArgument, "cannot parse parameter list '" + text + "'");
    v.push_back(d);
  }
  if (v.empty()) throw Error(ErrorCode::kInvalidArgument, "empty parameter list");
  return ParamPoint(to_vec(v));
}

ModelSetup build_model(const Config& cfg) {
  ModelSetup s;
  s.family = cfg.get_string("model", "family", "");
  if (s.family == "ssm1") {
    s.model = ssm_scalar_family(cfg.get_double("model", "b", 1.0),
                                cfg.get_double("model", "q_zeta", 1.0),
                                cfg.get_double("model", "q_xi", 0.1));
  } else if (s.family == "ssm") {
    s.model = ssm_spec(get_size(cfg, "model", "p", 1), get_size(cfg, "model", "q", 1));
  } else if (s.family == "glm") {
    s.model = glm_spec(get_size(cfg, "model", "p", 1), get_size(cfg, "model", "q", 1));
  } else if (s.family == "sv") {
    SvBounds b;
    b.beta_min = cfg.get_double("model", "beta_min", b.beta_min);
    b.sigma_min = cfg.get_double("model", "sigma_min", b.sigma_min);
    b.phi_max = cfg.get_double("model", "phi_max", b.phi_max);
    s.model = sv_spec(b);
  } else if (s.family == "finite") {
    s.model = finite_hmm_spec(get_size(cfg, "model", "states", 2),
                              get_size(cfg, "model", "symbols", 2));
  } else if (s.family == "iid") {
    s.model = iid_gaussian_spec();
  } else {
    throw Error(ErrorCode::kConfig, "[model] family: unknown family '" + s.family + "'");
  }
  if (cfg.has("model", "theta_star")) {
    s.theta_star = ParamPoint(to_vec(get_doubles(cfg, "model", "theta_star")));
    try {
      s.model->at(s.theta_star);
    } catch (const Error& e) {
      throw Error(ErrorCode::kConfig, std::string("[model] theta_star: ") + e.what());
    }
  }
  return s;
}

InitialDist build_init(const Config& cfg, const std::string& section, const std::string& prefix,
                       const Model& model) {
  const std::string kind = cfg.get_string(section, prefix, "stationary");
  if (kind == "stationary") return InitialDist::stationary();
  const auto p = static_cast<Eigen::Index>(model.state_dim());
  const auto q = static_cast<Eigen::Index>(model.obs_dim());
  auto sized = [&](const std::string& key, Eigen::Index n) {
    Vec v = to_vec(get_doubles(cfg, section, key));
    if (v.size() != n)
      throw Error(ErrorCode::kConfig, "[" + section + "] " + key + ": expected " +
                                          std::to_string(n) + " values");
    return v;
  };
  if (kind == "point_mass") {
    StateObs z;
    z.x = sized(prefix + "_x", p);
    z.y = cfg.has(section, prefix + "_y") ? sized(prefix + "_y", q) : Vec::Zero(q);
    return InitialDist::point_mass(z);
  }
  if (kind == "gaussian") {
    const Vec mean = sized(prefix + "_mean", p + q);
    const Vec cov = sized(prefix + "_cov", (p + q) * (p + q));
    return InitialDist::gaussian(mean, Eigen::Map<const Mat>(cov.data(), p + q, p + q));
  }
  throw Error(ErrorCode::kConfig, "[" + section + "] " + prefix + ": unknown initial law '" + kind + "'");
}

ExperimentConfig ExperimentConfig::from_config(const Config& cfg) {
  ExperimentConfig e;
  e.raw = cfg;
  e.setup = build_model(cfg);
  if (e.setup.theta_star.dim() == 0) throw Error(ErrorCode::kConfig, "[model] theta_star is required");
  const Model& model = *e.setup.model;

  for (auto n : cfg.get("data", "n").as_ints()) {
    if (n < 0) throw Error(ErrorCode::kConfig, "[data] n: values must be nonnegative");
    e.ns.push_back(static_cast<std::size_t>(n));
  }
  for (std::size_t j = 1; j < e.ns.size(); ++j)
    if (e.ns[j] <= e.ns[j - 1]) throw Error(ErrorCode::kConfig, "[data] n: must be strictly increasing");
  if (e.ns.empty()) throw Error(ErrorCode::kConfig, "[data] n: at least one value required");
  e.seed = static_cast<std::uint64_t>(cfg.get_int("data", "seed", 1));
  e.truth_init = build_init(cfg, "data", "truth_init", model);
  e.inference_init = build_init(cfg, "data", "inference_init", model);

  e.lik.method = lik_method_from_string(cfg.get_string("inference", "method", "kalman"));
  e.lik.particles = get_size(cfg, "inference", "particles", 512);
  e.lik.nodes = get_size(cfg, "inference", "nodes", 401);
  e.lik.seed = mix64(e.seed ^ 0x6c696bull);
  e.sampler = cfg.get_string("inference", "sampler", "grid");
  if (e.sampler != "grid" && e.sampler != "mh")
    throw Error(ErrorCode::kConfig, "[inference] sampler: expected \"grid\" or \"mh\"");

  const std::string prior = cfg.get_string("inference", "prior", "uniform");
  if (prior != "uniform" && prior != "improper_uniform")
    throw Error(ErrorCode::kConfig, "[inference] prior: expected \"uniform\" or \"improper_uniform\"");

  const std::size_t d = e.setup.theta_star.dim();
  if (cfg.has("inference", "grid_points")) {
    for (const auto& pt : cfg.get("inference", "grid_points").as_list()) {
      const ParamPoint p(to_vec(pt.as_doubles()));
      if (p.dim() != d) throw Error(ErrorCode::kConfig, "[inference] grid_points: wrong dimension");
      e.grid.points.push_back(p);
      e.grid.prior_weight.push_back(1.0);
      e.grid.cell_volume.push_back(1.0);
    }
  } else if (cfg.has("inference", "grid_lo")) {
    const auto lo = get_doubles(cfg, "inference", "grid_lo");
    const auto hi = get_doubles(cfg, "inference", "grid_hi");
    const auto count = cfg.get("inference", "grid_count").as_ints();
    if (lo.size() != d || hi.size() != d || count.size() != d)
      throw Error(ErrorCode::kConfig, "[inference] grid_lo/grid_hi/grid_count need one entry per parameter");
    const std::string kind = cfg.get_string("inference", "grid_kind", "linspace");
    std::vector<ParamGrid> axes;
    for (std::size_t i = 0; i < d; ++i) {
      if (kind == "linspace") axes.push_back(linspace_grid(lo[i], hi[i], static_cast<std::size_t>(count[i])));
      else if (kind == "cells") axes.push_back(cell_grid(lo[i], hi[i], static_cast<std::size_t>(count[i])));
      else throw Error(ErrorCode::kConfig, "[inference] grid_kind: expected \"linspace\" or \"cells\"");
    }
    e.grid = d == 1 ? axes.front() : product_grid(axes);
    for (std::size_t i = 0; i < d; ++i)
      if (e.setup.theta_star[i] < lo[i] || e.setup.theta_star[i] > hi[i])
        throw Error(ErrorCode::kConfig, "[inference] grid does not cover theta_star");
  } else if (e.sampler == "grid") {
    throw Error(ErrorCode::kConfig, "[inference] grid_lo/grid_hi/grid_count or grid_points required");
  }

  if (e.sampler == "mh") {
    e.mh.steps = get_size(cfg, "inference", "mh_steps", 5000);
    e.mh.burn_in = get_size(cfg, "inference", "mh_burn_in", 500);
    e.mh.proposal_sd = to_vec(get_doubles(cfg, "inference", "mh_proposal_sd"));
    e.mh.start = cfg.has("inference", "mh_start")
                     ? ParamPoint(to_vec(get_doubles(cfg, "inference", "mh_start")))
                     : e.setup.theta_star;
    e.mh.seed = mix64(e.seed ^ 0x6d68ull);
    e.mh.lik = e.lik;
  }

  for (auto p : cfg.has("outputs", "ps") ? cfg.get("outputs", "ps").as_ints() : std::vector<std::int64_t>{}) {
    if (p < 1) throw Error(ErrorCode::kConfig, "[outputs] ps: entries must be positive");
    e.ps.push_back(static_cast<int>(p));
  }
  e.out_dir = cfg.get_string("outputs", "dir", "out");
  if (cfg.has("outputs", "audits")) e.audits = cfg.get("outputs", "audits").as_strings();
  e.write_posteriors = cfg.get_bool("outputs", "write_posteriors", true);
  return e;
}

void write_observations_csv(std::ostream& os, const ObsSeq& obs, std::size_t obs_dim) {
  os << std::setprecision(17) << "k";
  for (std::size_t i = 0; i < obs_dim; ++i) os << ",y_" << i;
  os << '\n';
  for (std::size_t k = 0; k < obs.size(); ++k) {
    os << (k + 1);
    for (Eigen::Index i = 0; i < obs.y[k].size(); ++i) os << ',' << obs.y[k](i);
    os << '\n';
  }
}

ObsSeq read_observations_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::kConfig, "cannot open observations '" + path + "'");
  ObsSeq obs;
  std::string line;
  std::size_t line_no = 0, width = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (line_no == 1 || line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool first = true;
    while (std::getline(ss, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (cell.empty() || end == cell.c_str())
        throw Error(ErrorCode::kConfig, path + ":" + std::to_string(line_no) + ": bad number '" + cell + "'");
      if (!first) row.push_back(v);
      first = false;
    }
    if (row.empty() || (width && row.size() != width))
      throw Error(ErrorCode::kConfig, path + ":" + std::to_string(line_no) + ": wrong number of columns");
    width = row.size();
    obs.y.push_back(to_vec(row));
  }
  return obs;
}

namespace {

std::vector<AuditReport> experiment_audits(const ExperimentConfig& cfg, const ObsSeq& obs) {
  std::vector<AuditReport> out;
  const Model& model = *cfg.setup.model;
  const ParamPoint& star = cfg.setup.theta_star;
  for (const std::string& name : cfg.audits) {
    if (name == "B3" || name == "C2") {
      std::vector<ParamPoint> thetas{star};
      if (!cfg.grid.points.empty()) {
        thetas.push_back(cfg.grid.points.front());
        thetas.push_back(cfg.grid.points.back());
      }
      out.push_back(positivity_audit(model, thetas, name == "B3" ? PositivityKind::kB3 : PositivityKind::kC2,
                                     200, cfg.seed));
    } else if (name == "B4" || name == "C3") {
      const std::vector<double> deltas{1e-1, 1e-2, 1e-3};
      const auto rows = information_denseness_profile(
          model, cfg.grid, star, deltas, name == "B4" ? DivergenceKind::kDelta : DivergenceKind::kDeltaBar,
          20000, cfg.seed);
      AuditReport r;
      r.assumption = name;
      r.seed = cfg.seed;
      r.sims = cfg.grid.size();
      double min_mass = rows.front().prior_mass;
      bool zero = false;
      std::ostringstream d;
      d << std::setprecision(17) << "prior mass of {divergence <= delta}:";
      for (const auto& row : rows) {
        min_mass = std::min(min_mass, row.prior_mass);
        zero = zero || row.zero_mass;
        d << " delta=" << row.delta << ":" << row.prior_mass;
      }
      r.statistic = min_mass;
      r.status = zero ? AuditStatus::kFail : AuditStatus::kPass;
      r.detail = d.str();
      out.push_back(r);
    } else if (name == "Merging") {
      const auto curve = merging_curve(model, star, cfg.inference_init, obs);
      AuditReport r;
      r.assumption = "Merging";
      r.status = AuditStatus::kEstimate;
      r.statistic = std::abs(curve.back());
      r.seed = cfg.seed;
      r.sims = curve.size();
      r.detail = "|n^-1 log(p_eta / p_stationary)| at theta* and the largest n";
      out.push_back(r);
    } else {
      throw Error(ErrorCode::kConfig, "[outputs] audits: unknown audit '" + name + "'");
    }
  }
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& content,
                std::vector<std::string>& files) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kConfig, "cannot write '" + path.string() + "'");
  f << content;
  files.push_back(path.filename().string());
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, bool write_files) {
  ExperimentResult res;
  const Model& model = *cfg.setup.model;
  {
    // The output location does not influence any number, so it stays out of
    // the hash and identical experiments written to two places agree.
    Config hashed = cfg.raw;
    hashed.set("outputs", "dir", "");
    res.config_hash = fnv1a64(hashed.serialize());
  }
  const std::size_t nmax = cfg.ns.back();

  if (nmax > 0) {
    const Trajectory traj =
        simulate_complete(model, cfg.setup.theta_star, cfg.truth_init, nmax, cfg.seed);
    res.observations = project_observations(traj);
  }

  if (cfg.sampler == "grid") {
    const auto ll = grid_prefix_logliks(model, cfg.grid, res.observations, cfg.inference_init,
                                        cfg.lik, cfg.ns);
    for (std::size_t j = 0; j < cfg.ns.size(); ++j) {
      std::vector<double> col(cfg.grid.size());
      for (std::size_t i = 0; i < cfg.grid.size(); ++i) col[i] = ll[i][j];
      try {
        res.posteriors.push_back(posterior_from_logliks(cfg.grid, col, cfg.ns[j]));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kDegeneratePosterior || j + 1 == cfg.ns.size())
          throw Error(e.code(), std::string("experiment failed: ") + e.what());
        res.notes.push_back("n=" + std::to_string(cfg.ns[j]) + ": degenerate posterior skipped");
      }
    }
    res.concentration = concentration_profile(res.posteriors, model.param_space(),
                                              cfg.setup.theta_star, cfg.ps);
  } else {
    const bool bounded = cfg.raw.has("inference", "grid_lo");
    std::vector<double> lo, hi;
    if (bounded) {
      lo = cfg.raw.get("inference", "grid_lo").as_doubles();
      hi = cfg.raw.get("inference", "grid_hi").as_doubles();
    }
    auto prior = [&](const ParamPoint& th) {
      for (std::size_t i = 0; bounded && i < th.dim(); ++i)
        if (th[i] < lo[i] || th[i] > hi[i]) return kNegInf;
      return 0.0;
    };
    res.mh = mh_posterior(model, prior, res.observations, cfg.inference_init, cfg.mh);
  }
  if (nmax > 0) res.audits = experiment_audits(cfg, res.observations);

  if (!write_files) return res;
  namespace fs = std::filesystem;
  const fs::path dir(cfg.out_dir);
  fs::create_directories(dir);
  std::vector<std::string> files;
  {
    std::ostringstream os;
    write_observations_csv(os, res.observations, model.obs_dim());
    write_file(dir / "observations.csv", os.str(), files);
  }
  if (cfg.write_posteriors) {
    for (const auto& post : res.posteriors) {
      std::ostringstream os;
      write_posterior_csv(os, post);
      write_file(dir / ("posterior_n" + std::to_string(post.n) + ".csv"), os.str(), files);
    }
  }
  if (cfg.sampler == "grid") {
    std::ostringstream os;
    write_concentration_csv(os, res.concentration);
    write_file(dir / "concentration.csv", os.str(), files);
  } else {
    std::ostringstream os;
    os << std::setprecision(17);
    for (std::size_t j = 0; j < cfg.setup.theta_star.dim(); ++j) os << (j ? "," : "") << "theta_" << j;
    os << '\n';
    for (const auto& s : res.mh.samples) {
      for (std::size_t j = 0; j < s.dim(); ++j) os << (j ? "," : "") << s[j];
      os << '\n';
    }
    write_file(dir / "mh_samples.csv", os.str(), files);
  }
  {
    std::ostringstream os;
    write_jsonl(os, res.audits);
    write_file(dir / "audits.jsonl", os.str(), files);
  }
  {
    std::ostringstream os;
    char hash[32];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(res.config_hash));
    os << "config_hash = " << hash << '\n';
    os << "seed = " << cfg.seed << '\n';
    os << "family = " << cfg.setup.family << '\n';
    os << "likelihood = " << to_string(cfg.lik.method) << '\n';
    os << "sampler = " << cfg.sampler << '\n';
    os << "n =";
    for (auto n : cfg.ns) os << ' ' << n;
    os << '\n';
    if (cfg.sampler == "mh")
      os << std::setprecision(17) << "mh_acceptance = " << res.mh.acceptance_rate << '\n'
         << "mh_pseudo_marginal = " << (res.mh.pseudo_marginal ? "true" : "false") << '\n';
    for (const auto& note : res.notes) os << "note = " << note << '\n';
    for (const auto& f : files) os << "file = " << f << '\n';
    write_file(dir / "manifest.txt", os.str(), files);
  }
  res.files = files;
  return res;
}

}  // namespace fdpomm
