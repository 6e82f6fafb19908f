#include <cstdlib>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "normsim/sim/runner.hpp"

using namespace normsim;

namespace {

unsigned default_jobs() {
  if (const char* env = std::getenv("NORMSIM_JOBS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return static_cast<unsigned>(n);
    } catch (const std::exception&) {
    }
    throw ConfigError(std::string("NORMSIM_JOBS must be a positive integer, got '") + env + "'");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Norm learning and planning in a commons gridworld"};
  std::string experiment, config, out, seeds;
  unsigned jobs = 0;
  bool trajectory = false;
  app.add_option("--experiment", experiment, "passive | outcomes | intergen | emergence")->required();
  app.add_option("--config", config, "experiment INI file")->required();
  app.add_option("--out", out, "output directory")->required();
  app.add_option("--seeds", seeds, "seed list, e.g. 1..13 or 1,4,9; overrides the config");
  app.add_option("--jobs", jobs, "worker threads (default: NORMSIM_JOBS, else all cores)");
  app.add_flag("--emit-trajectory", trajectory, "also write per-step agent trajectories");
  CLI11_PARSE(app, argc, argv);

  try {
    ExperimentConfig x = load_experiment(config, experiment_from(experiment));
    if (!seeds.empty()) x.seeds = parse_seeds(seeds);
    RunOptions opt{out, jobs ? jobs : default_jobs(), trajectory};
    const auto outcome = run_experiment(x, opt);
    for (const auto& c : outcome.conditions) {
      const Series reward = c.metric(0), recall = c.metric(4);
      std::cout << c.condition() << ": " << c.runs() << " runs, " << c.rows() << " steps";
      if (c.rows() > 0)
        std::cout << ", final collective reward " << fixed6(reward.mean.back()) << ", final recall "
                  << fixed6(recall.mean.back());
      std::cout << '\n';
    }
    std::cout << "wrote " << out << "/manifest.json\n";
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "normsim: config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "normsim: " << e.what() << '\n';
    return 1;
  }
}
