#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vkci/experiments.hpp"

using namespace vkci;

int main(int argc, char** argv) {
  CLI::App app{"convex-integration experiment driver"};
  app.require_subcommand(1);

  std::string config_path, out;
  int d = 0, k = -1;
  long n = -1;
  std::vector<double> sigmas, gammas;
  double alpha = -1, beta = -1, eps = -1, gamma = -1;
  long seed = -1;

  std::vector<std::pair<std::string, ExperimentKind>> kinds = {
      {"step-verify", ExperimentKind::step_verify},
      {"stage-slope", ExperimentKind::stage_slope},
      {"nk-run", ExperimentKind::nk_run},
      {"ma-roundtrip", ExperimentKind::ma_roundtrip},
      {"density-demo", ExperimentKind::density_demo},
      {"energy-scan", ExperimentKind::energy_scan}};

  for (auto& [name, kind] : kinds) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "flat key=value config file");
    sub->add_option("--d", d);
    sub->add_option("--k", k);
    sub->add_option("--n", n);
    sub->add_option("--sigma", sigmas)->delimiter(',');
    sub->add_option("--alpha", alpha);
    sub->add_option("--beta", beta);
    sub->add_option("--eps", eps);
    sub->add_option("--gamma", gamma);
    sub->add_option("--gammas", gammas)->delimiter(',');
    sub->add_option("--seed", seed);
    sub->add_option("--out", out);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    ExperimentConfig cfg;
    if (!config_path.empty()) cfg = parse_config(config_path);
    for (auto& [name, kind] : kinds)
      if (app.got_subcommand(name)) cfg.kind = kind;
    // flags override file values
    if (d > 0) cfg.d = d;
    if (k >= 0) cfg.k = k;
    if (n >= 0) cfg.n = n;
    if (!sigmas.empty()) cfg.sigmas = sigmas;
    if (alpha >= 0) cfg.alpha = alpha;
    if (beta >= 0) cfg.beta = beta;
    if (eps >= 0) cfg.eps = eps;
    if (gamma >= 0) cfg.gamma = gamma;
    if (!gammas.empty()) cfg.gammas = gammas;
    if (seed >= 0) cfg.seed = (unsigned long)seed;
    if (!out.empty()) cfg.out = out;
    if (config_path.empty() && k < 0) cfg.k = 0;  // force per-kind requirement checks

    run_experiment(cfg);
  } catch (const config_error& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const precondition_error& e) {
    std::fprintf(stderr, "precondition error: %s\n", e.what());
    return 2;
  } catch (const resolvability_error& e) {
    std::fprintf(stderr, "resolvability error: %s\n", e.what());
    return 3;
  } catch (const divergence_error& e) {
    std::fprintf(stderr, "divergence error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
