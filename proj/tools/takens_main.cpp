// Command-line harness around the delay-embedding library.
//
// Subcommands: embed | bilip | intersect | immersion | svbound |
// predict-error | lyapunov | project | accept. Every option can also come
// from a config file (--config) with one [subcommand] section of key=value
// lines; command-line flags override file values.

#include <CLI11.hpp>

#include <iostream>
#include <map>

#include "takens/acceptance.hpp"
#include "takens/harness.hpp"

using takens::ExperimentConfig;

namespace {

void add_common_options(CLI::App* sub, ExperimentConfig& cfg) {
  sub->add_option("--system", cfg.system, "dynamics id: cat | rotation:<omega>");
  sub->add_option("--k", cfg.k, "delay length / projection rank");
  sub->add_option("--base", cfg.base, "base observable: cos1 | zero");
  sub->add_option("--radius", cfg.radius, "perturbation ball radius");
  sub->add_option("--seed", cfg.seed, "top-level seed");
  sub->add_option("--measure", cfg.measure, "lebesgue | orbit:<burn> | cantor:<level>");
  sub->add_option("--points", cfg.points, "sample size");
  sub->add_option("--pairs", cfg.pairs, "pair draws");
  sub->add_option("--probes", cfg.probes, "probe count");
  sub->add_option("--eps-min,--eps_min", cfg.eps_min, "smallest ball radius");
  sub->add_option("--eps-max,--eps_max", cfg.eps_max, "largest ball radius");
  sub->add_option("--cells", cfg.cells, "log-spaced radius cells");
  sub->add_option("--eps", cfg.eps, "tolerance (lyapunov deviation)");
  sub->add_option("--eps-sep,--eps_sep", cfg.eps_sep, "separation on M (intersect)");
  sub->add_option("--delta-emb,--delta_emb", cfg.delta_emb, "image tolerance (intersect)");
  sub->add_option("--n,--n_steps", cfg.n_steps, "horizon (lyapunov)");
  sub->add_option("--m-grid,--m_grid", cfg.m_grid, "comma list of E_M thresholds");
  sub->add_option("--draws", cfg.draws, "Monte Carlo draws");
  sub->add_option("--trials", cfg.trials, "targets per base point");
  sub->add_option("--out", cfg.out, "output root (default $TAKENS_OUT or ./out)");
  sub->configurable();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"delay-coordinate embedding toolkit"};
  app.require_subcommand(1);
  app.fallthrough();  // lets --config appear after the subcommand name
  app.set_config("--config", "", "config file with a [subcommand] section");

  const std::vector<std::string> ops = {"embed",   "bilip",         "intersect",
                                        "immersion", "svbound",     "predict-error",
                                        "lyapunov", "project"};
  std::map<std::string, ExperimentConfig> configs;
  for (const auto& op : ops) {
    configs[op] = ExperimentConfig{};
    configs[op].op = op;
    CLI::App* sub = app.add_subcommand(op);
    add_common_options(sub, configs[op]);
  }

  ExperimentConfig accept_cfg;
  accept_cfg.op = "accept";
  CLI::App* accept = app.add_subcommand("accept", "run the acceptance battery");
  accept->add_option("--profile", accept_cfg.profile, "quick | full");
  accept->add_option("--out", accept_cfg.out, "output root");
  accept->configurable();

  CLI11_PARSE(app, argc, argv);

  try {
    if (accept->parsed()) {
      auto results = takens::acceptance_suite(accept_cfg.profile, &std::cout);
      auto dir = takens::make_run_dir(takens::output_root(accept_cfg.out), "accept", 0);
      takens::write_json(dir / "acceptance.json",
                         takens::acceptance_to_json(accept_cfg.profile, results));
      std::cout << "report: " << (dir / "acceptance.json").string() << "\n";
      for (const auto& r : results) {
        if (!r.pass) return 1;
      }
      return 0;
    }
    for (const auto& op : ops) {
      if (app.get_subcommand(op)->parsed()) {
        takens::RunResult rr = takens::run(configs[op]);
        std::cout << "record: " << (rr.dir / "record.json").string() << "\n";
        return rr.pass ? 0 : 1;
      }
    }
  } catch (const takens::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
