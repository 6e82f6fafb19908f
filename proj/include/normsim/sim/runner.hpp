#pragma once

#include <chrono>
#include <condition_variable>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "normsim/sim/output.hpp"

namespace normsim {

struct RunTask {
  std::size_t condition = 0;  // index into ExperimentConfig::conditions
  std::uint64_t seed = 0;
};

/// Condition-major list of every (condition, seed) pair.
inline std::vector<RunTask> run_tasks(const ExperimentConfig& x) {
  std::vector<RunTask> out;
  for (std::size_t c = 0; c < x.conditions.size(); ++c)
    for (auto s : x.seeds) out.push_back({c, s});
  return out;
}

/// Runs every task on `jobs` worker threads. `work` runs on a worker;
/// `deliver` runs on the calling thread, once per task, in task order, so
/// anything it folds is independent of scheduling. The first exception from
/// either stops the pool and is rethrown.
template <class Result>
void run_pool(std::size_t n_tasks, unsigned jobs, const std::function<Result(std::size_t)>& work,
              const std::function<void(std::size_t, Result&&)>& deliver) {
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(n_tasks, 1))));
  std::vector<std::optional<Result>> done(n_tasks);
  std::mutex mu;
  std::condition_variable cv;
  std::size_t next = 0;
  std::exception_ptr error;

  auto worker = [&] {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard lock(mu);
        if (error || next >= n_tasks) return;
        i = next++;
      }
      try {
        Result r = work(i);
        std::lock_guard lock(mu);
        done[i].emplace(std::move(r));
      } catch (...) {
        std::lock_guard lock(mu);
        if (!error) error = std::current_exception();
      }
      cv.notify_all();
    }
  };
  std::vector<std::thread> pool;
  for (unsigned k = 0; k < jobs; ++k) pool.emplace_back(worker);

  for (std::size_t i = 0; i < n_tasks; ++i) {
    Result r;
    {
      std::unique_lock lock(mu);
      cv.wait(lock, [&] { return error || done[i].has_value(); });
      if (error) break;
      r = std::move(*done[i]);
      done[i].reset();
    }
    try {
      deliver(i, std::move(r));
    } catch (...) {
      std::lock_guard lock(mu);
      error = std::current_exception();
      break;
    }
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

struct RunOptions {
  std::filesystem::path out;
  unsigned jobs = 1;
  bool trajectory = false;
};

struct ExperimentOutcome {
  std::vector<ConditionAggregate> conditions;
  std::vector<RunRecord> runs;
};

/// Runs a whole experiment and writes
///   <out>/<condition>/seed_<n>/{beliefs,metrics,events}.csv (and trajectory.csv)
///   <out>/summary.json, <out>/manifest.json.
inline ExperimentOutcome run_experiment(const ExperimentConfig& x, const RunOptions& opt) {
  namespace fs = std::filesystem;
  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();
  const auto tasks = run_tasks(x);

  ExperimentOutcome outcome;
  for (const auto& c : x.conditions) outcome.conditions.emplace_back(c.condition, c.active, c.theta);

  struct Done {
    EpisodeResult result;
    RunRecord record;
  };
  auto work = [&](std::size_t i) {
    const auto& task = tasks[i];
    const EpisodeConfig& cfg = x.conditions[task.condition];
    const auto start = Clock::now();
    Done d{Episode(cfg, task.seed, EpisodeOptions{opt.trajectory}).run(), {}};
    const fs::path rel = fs::path(cfg.condition) / ("seed_" + std::to_string(task.seed));
    fs::create_directories(opt.out / rel);
    auto emit = [&](const char* name, auto&& writer) {
      const fs::path p = rel / name;
      std::ofstream f(opt.out / p, std::ios::binary);
      if (!f) throw ConfigError("cannot write " + (opt.out / p).string());
      writer(f, d.result);
      d.record.files.push_back(p.generic_string());
    };
    emit("beliefs.csv", write_beliefs_csv);
    emit("metrics.csv", write_metrics_csv);
    emit("events.csv", write_events_csv);
    if (opt.trajectory) emit("trajectory.csv", write_trajectory_csv);
    d.record.condition = cfg.condition;
    d.record.seed = task.seed;
    d.record.seconds = std::chrono::duration<double>(Clock::now() - start).count();
    return d;
  };
  auto deliver = [&](std::size_t i, Done&& d) {
    outcome.conditions[tasks[i].condition].add(d.result);
    outcome.runs.push_back(std::move(d.record));
  };
  fs::create_directories(opt.out);
  run_pool<Done>(tasks.size(), opt.jobs, work, deliver);

  {
    std::ofstream f(opt.out / "summary.json", std::ios::binary);
    f << summary_json(x, outcome.conditions).dump(2) << '\n';
  }
  const double total = std::chrono::duration<double>(Clock::now() - t0).count();
  std::ofstream f(opt.out / "manifest.json", std::ios::binary);
  f << manifest_json(x, outcome.runs, {"summary.json"}, total).dump(2) << '\n';
  return outcome;
}

}  // namespace normsim
