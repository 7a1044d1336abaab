#include "liftpose/stability.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <optional>
#include <thread>

#include "liftpose/errors.hpp"

namespace liftpose {
namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace

EpochWindow last_quarter(int epochs) {
  const int span = std::max(1, epochs / 4);
  return EpochWindow{epochs - span + 1, epochs};
}

MeanStd mean_std(const std::vector<double>& values) {
  MeanStd r;
  if (values.empty()) throw ContractError("mean_std of an empty set");
  double sum = 0.0;
  for (double v : values) sum += v;
  r.mean = sum / static_cast<double>(values.size());
  if (values.size() < 2) {
    r.std = std::numeric_limits<double>::quiet_NaN();
    return r;
  }
  double ss = 0.0;
  for (double v : values) ss += (v - r.mean) * (v - r.mean);
  r.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  return r;
}

StabilitySummary summarize(const std::vector<std::uint64_t>& seeds,
                           const std::vector<std::vector<double>>& curves, EpochWindow window) {
  if (curves.empty()) throw ContractError("no completed runs to summarize");
  if (seeds.size() != curves.size()) throw ContractError("one seed per curve is required");
  const std::size_t epochs = curves.front().size();
  for (const auto& c : curves) {
    if (c.size() != epochs || epochs == 0) throw ContractError("curves must be non-empty and equally long");
  }
  if (window.first < 1 || window.last < window.first || static_cast<std::size_t>(window.last) > epochs) {
    throw ContractError("window [" + std::to_string(window.first) + ", " +
                        std::to_string(window.last) + "] lies outside a run of " +
                        std::to_string(epochs) + " epochs");
  }
  StabilitySummary s;
  s.seeds = seeds;
  s.curves = curves;
  s.window = window;

  std::vector<double> finals, mins;
  for (const auto& c : curves) {
    finals.push_back(c.back());
    mins.push_back(*std::min_element(c.begin(), c.end()));
  }
  s.final_epoch = mean_std(finals);
  s.min_epoch = mean_std(mins);

  double mean_acc = 0.0, std_acc = 0.0;
  for (int e = window.first; e <= window.last; ++e) {
    std::vector<double> column;
    for (const auto& c : curves) column.push_back(c[static_cast<std::size_t>(e - 1)]);
    const MeanStd ms = mean_std(column);
    mean_acc += ms.mean;
    std_acc += ms.std;
  }
  const double span = static_cast<double>(window.last - window.first + 1);
  s.windowed = MeanStd{mean_acc / span, std_acc / span};
  return s;
}

StabilityResult stability_study(const TrainConfig& config, const std::vector<std::uint64_t>& seeds,
                                const PoseSet& train_set, const PoseSet& eval_set,
                                const Schema& schema, const StabilityOptions& options) {
  if (seeds.size() < 2) throw ConfigError("a stability study needs at least 2 seeds");
  if (!eval_set.has_ground_truth()) throw ConfigError("the stability eval set needs 3D ground truth");
  config.validate();
  const EpochWindow window = options.window.value_or(last_quarter(config.epochs));
  if (window.first < 1 || window.last < window.first || window.last > config.epochs) {
    throw ConfigError("stability window lies outside the configured epochs");
  }

  std::vector<std::optional<TrainResult>> results(seeds.size());
  std::vector<std::string> failures(seeds.size());
  std::exception_ptr fatal;
  std::mutex fatal_mutex;
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= seeds.size()) return;
      TrainConfig c = config;
      c.seed = seeds[i];
      TrainOutput out;
      if (!options.directory.empty()) {
        out.directory = options.directory / ("seed_" + std::to_string(seeds[i]));
      }
      try {
        results[i].emplace(train(train_set, c, schema, &eval_set, out));
      } catch (const DivergenceError& e) {
        failures[i] = e.what();
      } catch (...) {
        std::lock_guard lock(fatal_mutex);
        if (!fatal) fatal = std::current_exception();
        next = seeds.size();
      }
    }
  };
  unsigned jobs = options.jobs ? options.jobs : std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min<unsigned>(jobs, static_cast<unsigned>(seeds.size()));
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (fatal) std::rethrow_exception(fatal);

  StabilityResult result;
  std::vector<std::uint64_t> kept;
  std::vector<std::vector<double>> curves;
  std::vector<std::pair<std::uint64_t, std::string>> aborted;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (!results[i]) {
      aborted.emplace_back(seeds[i], failures[i]);
      continue;
    }
    std::vector<double> curve;
    for (const auto& e : results[i]->record.epochs) curve.push_back(e.eval_mpjpe.value());
    kept.push_back(seeds[i]);
    curves.push_back(std::move(curve));
    result.runs.push_back(std::move(*results[i]));
  }
  if (curves.empty()) {
    throw DivergenceError("every stability run aborted; first reason: " + aborted.front().second);
  }
  result.summary = summarize(kept, curves, window);
  result.summary.aborted = std::move(aborted);
  return result;
}

std::string stability_curves_csv(const StabilitySummary& s, const std::string& config_hash) {
  std::string out = "# config_hash=" + config_hash + "\nseed,epoch,mpjpe\n";
  for (std::size_t i = 0; i < s.curves.size(); ++i) {
    for (std::size_t e = 0; e < s.curves[i].size(); ++e) {
      out += std::to_string(s.seeds[i]) + "," + std::to_string(e + 1) + "," + fmt(s.curves[i][e]) + "\n";
    }
  }
  return out;
}

std::string stability_summary_csv(const StabilitySummary& s, const std::string& config_hash) {
  std::string out =
      "# config_hash=" + config_hash + "\nstatistic,mean,std,runs,first_epoch,last_epoch\n";
  const std::string runs = std::to_string(s.curves.size());
  const std::string last = std::to_string(s.curves.empty() ? 0 : s.curves.front().size());
  out += "final_epoch," + fmt(s.final_epoch.mean) + "," + fmt(s.final_epoch.std) + "," + runs + "," +
         last + "," + last + "\n";
  out += "window," + fmt(s.windowed.mean) + "," + fmt(s.windowed.std) + "," + runs + "," +
         std::to_string(s.window.first) + "," + std::to_string(s.window.last) + "\n";
  out += "min_epoch," + fmt(s.min_epoch.mean) + "," + fmt(s.min_epoch.std) + "," + runs + ",1," +
         last + "\n";
  for (const auto& [seed, reason] : s.aborted) {
    out += "# aborted seed=" + std::to_string(seed) + ": " + reason + "\n";
  }
  return out;
}

std::string format_stability(const StabilitySummary& s) {
  char line[160];
  std::string out;
  std::snprintf(line, sizeof(line), "%-22s %12s %12s\n", "statistic (mm)", "mean", "std");
  out += line;
  auto row = [&](const std::string& name, const MeanStd& m) {
    std::snprintf(line, sizeof(line), "%-22s %12.3f %12.3f\n", name.c_str(), m.mean, m.std);
    out += line;
  };
  row("final epoch", s.final_epoch);
  row("epochs " + std::to_string(s.window.first) + "-" + std::to_string(s.window.last), s.windowed);
  row("best epoch", s.min_epoch);
  out += "runs: " + std::to_string(s.curves.size());
  if (!s.aborted.empty()) out += " (" + std::to_string(s.aborted.size()) + " aborted)";
  out += "\n";
  for (const auto& [seed, reason] : s.aborted) {
    out += "  seed " + std::to_string(seed) + " aborted: " + reason + "\n";
  }
  return out;
}

void write_stability(const std::filesystem::path& directory, const StabilitySummary& s,
                     const std::string& config_hash) {
  std::filesystem::create_directories(directory);
  write_text(directory / "stability_curves.csv", stability_curves_csv(s, config_hash));
  write_text(directory / "stability_summary.csv", stability_summary_csv(s, config_hash));
  write_text(directory / "stability_table.txt", format_stability(s));
}

}  // namespace liftpose
