// Command-line front end. Every subcommand reads an optional config file and
// then applies flag overrides on top of it, so a config can be reproduced
// exactly from the command line and vice versa.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fdpomm/audit.hpp"
#include "fdpomm/config.hpp"
#include "fdpomm/divergence.hpp"
#include "fdpomm/error.hpp"
#include "fdpomm/experiment.hpp"
#include "fdpomm/likelihood.hpp"
#include "fdpomm/models.hpp"
#include "fdpomm/parallel.hpp"
#include "fdpomm/posterior.hpp"

using namespace fdpomm;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::size_t threads = 0;

  std::string family;
  std::optional<std::size_t> p, q, states, symbols;
  std::string theta_star;
  std::optional<double> b, q_zeta, q_xi;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "Config file");
  app->add_option("--seed", c.seed, "Random seed");
  app->add_option("--out", c.out, "Output directory (stdout when omitted)");
  app->add_option("--threads", c.threads, "Worker threads (0 = hardware)");
  app->add_option("--family", c.family, "Model family: ssm1, ssm, glm, sv, finite, iid");
  app->add_option("--p", c.p, "State dimension");
  app->add_option("--q", c.q, "Observation dimension");
  app->add_option("--states", c.states, "Finite model: number of hidden states");
  app->add_option("--symbols", c.symbols, "Finite model: number of symbols");
  app->add_option("--theta-star", c.theta_star, "True parameter, comma separated");
  app->add_option("--b", c.b, "ssm1: observation loading");
  app->add_option("--q-zeta", c.q_zeta, "ssm1: state noise variance");
  app->add_option("--q-xi", c.q_xi, "ssm1: observation noise variance");
}

ConfigValue list_of(const ParamPoint& p) {
  ConfigValue::List l;
  for (std::size_t i = 0; i < p.dim(); ++i) l.emplace_back(p[i]);
  return ConfigValue(l);
}

// Builds the effective config: file first, then flags.
Config effective_config(const Common& c) {
  Config cfg = c.config.empty() ? Config{} : Config::load(c.config);
  if (!c.family.empty()) cfg.set("model", "family", c.family);
  if (c.p) cfg.set("model", "p", static_cast<std::int64_t>(*c.p));
  if (c.q) cfg.set("model", "q", static_cast<std::int64_t>(*c.q));
  if (c.states) cfg.set("model", "states", static_cast<std::int64_t>(*c.states));
  if (c.symbols) cfg.set("model", "symbols", static_cast<std::int64_t>(*c.symbols));
  if (c.b) cfg.set("model", "b", *c.b);
  if (c.q_zeta) cfg.set("model", "q_zeta", *c.q_zeta);
  if (c.q_xi) cfg.set("model", "q_xi", *c.q_xi);
  if (!c.theta_star.empty()) cfg.set("model", "theta_star", list_of(parse_point(c.theta_star)));
  if (c.seed) cfg.set("data", "seed", static_cast<std::int64_t>(*c.seed));
  if (!c.out.empty()) cfg.set("outputs", "dir", c.out);
  if (!cfg.has("model", "family")) throw Error(ErrorCode::kConfig, "no model family (use --family or --config)");
  return cfg;
}

std::uint64_t seed_of(const Config& cfg) {
  return static_cast<std::uint64_t>(cfg.get_int("data", "seed", 1));
}

ParamPoint require_star(const ModelSetup& s) {
  if (s.theta_star.dim() == 0) throw Error(ErrorCode::kConfig, "theta_star is required (--theta-star)");
  return s.theta_star;
}

// Writes to <out>/<name> when an output directory was given, else stdout.
void emit(const Common& c, const std::string& name, const std::string& content) {
  if (c.out.empty()) {
    std::cout << content;
    return;
  }
  std::filesystem::create_directories(c.out);
  const auto path = std::filesystem::path(c.out) / name;
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kConfig, "cannot write '" + path.string() + "'");
  f << content;
  std::cerr << "wrote " << path.string() << '\n';
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

ObsSeq observations_for(const Config& cfg, const ModelSetup& s, const std::string& data_path,
                        std::size_t n) {
  if (!data_path.empty()) {
    ObsSeq obs = read_observations_csv(data_path);
    return n < obs.size() ? obs.prefix(n) : obs;
  }
  if (n == 0) return {};
  const InitialDist truth = build_init(cfg, "data", "truth_init", *s.model);
  return project_observations(simulate_complete(*s.model, require_star(s), truth, n, seed_of(cfg)));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Likelihoods, divergences, posteriors and assumption audits for partially observed Markov models"};
  app.require_subcommand(1);
  Common c;

  auto* sim = app.add_subcommand("simulate", "Simulate observations under theta_star");
  add_common(sim, c);
  std::size_t sim_n = 100;
  sim->add_option("--n", sim_n, "Number of observations");

  auto* lik = app.add_subcommand("loglik", "Log-likelihood of observations at a parameter");
  add_common(lik, c);
  std::string lik_theta, lik_method = "", lik_data;
  std::size_t lik_n = 100;
  std::optional<std::size_t> lik_particles;
  lik->add_option("--theta", lik_theta, "Parameter (defaults to theta_star)");
  lik->add_option("--method", lik_method, "kalman, forward, bpf or quadrature");
  lik->add_option("--particles", lik_particles, "Particle count for bpf");
  lik->add_option("--n", lik_n, "Observations to simulate when --data is absent");
  lik->add_option("--data", lik_data, "Observation CSV (k,y_0,...)");

  auto* post = app.add_subcommand("posterior", "Grid posterior from the config's [inference] grid");
  add_common(post, c);
  std::size_t post_n = 100;
  std::string post_data;
  post->add_option("--n", post_n, "Prefix length; 0 returns the prior");
  post->add_option("--data", post_data, "Observation CSV (k,y_0,...)");

  auto* kld = app.add_subcommand("kld", "Expected Kullback-Leibler divergence between kernels");
  add_common(kld, c);
  std::string kld_theta, kld_kind = "delta";
  std::size_t kld_draws = 100000;
  kld->add_option("--theta", kld_theta, "Parameter compared against theta_star")->required();
  kld->add_option("--kind", kld_kind, "delta or delta_bar")->check(CLI::IsMember({"delta", "delta_bar"}));
  kld->add_option("--draws", kld_draws, "Monte Carlo draws when no closed form exists");

  auto* aud = app.add_subcommand("audit", "Numerical audit of one assumption");
  add_common(aud, c);
  std::string aud_which;
  std::size_t aud_sims = 2000, aud_n = 200;
  std::vector<double> aud_m{10.0, 100.0, 1000.0};
  bool aud_improper = false;
  aud->add_option("--assumption", aud_which, "B3, C2, B4, C3, B5, B6, Kingman or Envelope")
      ->required()
      ->check(CLI::IsMember({"B3", "C2", "B4", "C3", "B5", "B6", "Kingman", "Envelope"}));
  aud->add_option("--sims", aud_sims, "Simulation or draw count");
  aud->add_option("--m", aud_m, "B5: compact-set indices m");
  aud->add_option("--n", aud_n, "Kingman: observation length");
  aud->add_flag("--improper", aud_improper, "B6: use the flat improper prior");

  auto* exp = app.add_subcommand("experiment", "Run a full configured experiment");
  add_common(exp, c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (c.threads) set_default_threads(c.threads);
    const Config cfg = effective_config(c);

    if (*exp) {
      const ExperimentConfig ec = ExperimentConfig::from_config(cfg);
      const ExperimentResult res = run_experiment(ec, true);
      for (const auto& note : res.notes) std::cerr << "note: " << note << '\n';
      for (const auto& f : res.files) std::cout << (std::filesystem::path(ec.out_dir) / f).string() << '\n';
      return 0;
    }

    const ModelSetup setup = build_model(cfg);
    const Model& model = *setup.model;

    if (*sim) {
      std::ostringstream os;
      write_observations_csv(os, observations_for(cfg, setup, "", sim_n), model.obs_dim());
      emit(c, "observations.csv", os.str());
    } else if (*lik) {
      const ObsSeq obs = observations_for(cfg, setup, lik_data, lik_n);
      LikOptions opts;
      opts.method = lik_method_from_string(
          lik_method.empty() ? cfg.get_string("inference", "method", "kalman") : lik_method);
      opts.particles = lik_particles ? *lik_particles
                                     : static_cast<std::size_t>(cfg.get_int("inference", "particles", 512));
      opts.seed = mix64(seed_of(cfg) ^ 0x6c696bull);
      const ParamPoint theta = lik_theta.empty() ? require_star(setup) : parse_point(lik_theta);
      const InitialDist init = build_init(cfg, "data", "inference_init", model);
      const LogLik ll = evaluate_loglik(model, theta, obs, init, opts);
      std::ostringstream os;
      os << "method,n,loglik,se\n"
         << to_string(ll.method) << ',' << ll.n << ',' << fmt(ll.value) << ','
         << (ll.se ? fmt(*ll.se) : std::string()) << '\n';
      emit(c, "loglik.csv", os.str());
    } else if (*post) {
      Config pc = cfg;
      pc.set("data", "n", static_cast<std::int64_t>(post_n));
      const ExperimentConfig ec = ExperimentConfig::from_config(pc);
      const ObsSeq obs = observations_for(cfg, setup, post_data, post_n);
      const PosteriorGrid pg = grid_posterior(model, ec.grid, obs.prefix(std::min(post_n, obs.size())),
                                              ec.inference_init, ec.lik);
      std::ostringstream os;
      write_posterior_csv(os, pg);
      emit(c, "posterior_n" + std::to_string(pg.n) + ".csv", os.str());
    } else if (*kld) {
      const ParamPoint star = require_star(setup);
      const ParamPoint theta = parse_point(kld_theta);
      const KldEstimate k = kld_kind == "delta" ? delta(model, star, theta, kld_draws, seed_of(cfg))
                                                : delta_bar_hmm(model, star, theta, kld_draws, seed_of(cfg));
      std::ostringstream os;
      os << "kind,method,value,se\n"
         << kld_kind << ',' << to_string(k.method) << ',' << fmt(k.value) << ','
         << (k.se ? fmt(*k.se) : std::string()) << '\n';
      emit(c, "kld.csv", os.str());
    } else if (*aud) {
      const std::uint64_t seed = seed_of(cfg);
      std::vector<AuditReport> reports;
      auto need_sv = [&]() {
        if (setup.family != "sv") throw Error(ErrorCode::kConfig, aud_which + " audit requires --family sv");
        SvBounds b;
        b.beta_min = cfg.get_double("model", "beta_min", b.beta_min);
        b.sigma_min = cfg.get_double("model", "sigma_min", b.sigma_min);
        b.phi_max = cfg.get_double("model", "phi_max", b.phi_max);
        return b;
      };
      auto sv_star = [&]() {
        return setup.theta_star.dim() ? sv_unpack(setup.theta_star) : SvParams{1.0, 0.5, 0.5};
      };
      if (aud_which == "B3" || aud_which == "C2") {
        reports.push_back(positivity_audit(model, {require_star(setup)},
                                           aud_which == "B3" ? PositivityKind::kB3 : PositivityKind::kC2,
                                           aud_sims, seed));
      } else if (aud_which == "B4" || aud_which == "C3") {
        ExperimentConfig ec = ExperimentConfig::from_config([&] {
          Config x = cfg;
          if (!x.has("data", "n")) x.set("data", "n", 1);
          x.set("outputs", "audits", ConfigValue::List{ConfigValue(aud_which)});
          return x;
        }());
        ec.grid.validate();
        const auto rows = information_denseness_profile(
            model, ec.grid, ec.setup.theta_star, {1e-1, 1e-2, 1e-3},
            aud_which == "B4" ? DivergenceKind::kDelta : DivergenceKind::kDeltaBar, aud_sims, seed);
        std::ostringstream os;
        write_denseness_csv(os, rows);
        emit(c, "denseness.csv", os.str());
        return 0;
      } else if (aud_which == "B5") {
        const auto r = tightness_audit_sv(sv_star(), need_sv(), aud_m, aud_sims, seed);
        reports.assign(r.begin(), r.end());
      } else if (aud_which == "B6") {
        const SvBounds b = need_sv();
        SvPrior prior;
        if (aud_improper) {
          prior.proper = false;
          prior.density = [](const SvParams&) { return 1.0; };
        } else {
          // Independent exponential priors on beta and sigma, uniform on phi.
          prior.density = [b](const SvParams& t) {
            return std::exp(-t.beta) * std::exp(-t.sigma) / (2.0 * b.phi_max);
          };
        }
        const auto r = b6_audit(sv_star(), b, prior, aud_sims, seed);
        reports.assign(r.begin(), r.end());
      } else if (aud_which == "Envelope") {
        const SvBounds b = need_sv();
        SvRegion region;
        region.sigma_min = b.sigma_min;
        region.sigma_max = cfg.get_double("model", "sigma_max", 3.0);
        region.log_beta_min = std::log(b.beta_min);
        region.log_beta_max = std::log(cfg.get_double("model", "beta_max", 10.0));
        region.phi_max = b.phi_max;
        const EnvelopeCheck e = sv_envelope_check(region, aud_sims, seed);
        AuditReport r;
        r.assumption = "Envelope";
        r.status = e.violations ? AuditStatus::kFail : AuditStatus::kPass;
        r.statistic = e.max_excess;
        r.seed = seed;
        r.sims = e.draws;
        r.detail = std::to_string(e.violations) + " draws above the analytic bound";
        reports.push_back(r);
      } else if (aud_which == "Kingman") {
        const ObsSeq obs = observations_for(cfg, setup, "", aud_n);
        const auto triples = random_triples(aud_n, 100, seed);
        if (setup.family == "sv") {
          reports.push_back(kingman_check(sv_envelope_log_w(need_sv(), obs), triples));
        } else if (setup.family == "finite") {
          reports.push_back(kingman_check(finite_hmm_log_w(model, {require_star(setup)}, obs), triples));
        } else {
          throw Error(ErrorCode::kConfig, "Kingman audit requires --family finite or sv");
        }
      }
      std::ostringstream os;
      write_jsonl(os, reports);
      emit(c, "audits.jsonl", os.str());
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::kConfig || e.code() == ErrorCode::kInvalidArgument ? 2 : 1;
  }
  return 0;
}
