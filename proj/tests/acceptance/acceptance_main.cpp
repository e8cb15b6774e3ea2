// Acceptance suite. Prints one PASS/FAIL line per criterion; exit status is
// nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "memlstm/commands.hpp"
#include "memlstm/crossbar.hpp"
#include "memlstm/lstm.hpp"
#include "memlstm/training.hpp"
#include "memlstm/weights_io.hpp"
#include "../test_support.hpp"

using namespace memlstm;
using memlstm::testing::random_model;
using memlstm::testing::random_vector;
using memlstm::testing::uniform;
namespace fs = std::filesystem;

namespace {

const std::string kAirline = std::string(MEMLSTM_DATA_DIR) + "/airline-passengers.csv";

struct Outcome {
  bool passed = true;
  std::string detail;
};

struct Criterion {
  int id;
  std::string title;
  double time_limit_s;  // 0 means no limit
  std::function<Outcome()> run;
};

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("memlstm_acceptance_" + name);
  fs::remove_all(dir);
  return dir;
}

RunConfig airline_config(const fs::path& out_dir, std::uint64_t seed) {
  RunConfig c = make_run_config({{"dataset", kAirline}});
  c.out_dir = out_dir;
  c.train.seed = seed;
  return c;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    files[fs::relative(entry.path(), dir).string()] = s.str();
  }
  return files;
}

Outcome gradient_check() {
  std::mt19937_64 rng(101);
  double worst = 0.0;
  std::size_t compared = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const Model m = random_model({1, 4}, rng);
    WindowedSeries batch;
    batch.look_back = 1 + trial % 3;
    for (int s = 0; s < 3; ++s) {
      batch.samples.push_back({random_vector(batch.look_back, rng, 0.0, 1.0), uniform(rng, 0, 1)});
    }
    const GradientCheckReport r = finite_difference_check(m.params, m.out, batch, 1e-5, 1e-5);
    if (!r.passed) {
      return {false, fmt::format("model {} failed, max relative error {:.3e}", trial,
                                 r.max_relative_error)};
    }
    worst = std::max(worst, r.max_relative_error);
    for (const auto& g : r.groups) compared += g.compared;
  }
  return {true, fmt::format("max relative error {:.3e} over {} entries", worst, compared)};
}

Outcome crossbar_equivalence() {
  std::mt19937_64 rng(202);
  const CrossbarConfig cfg;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Dims dims{1, 1 + rng() % 6};
    const Model m = random_model(dims, rng);
    std::vector<Vector> seq(1 + rng() % 8);
    for (auto& x : seq) x = random_vector(dims.n_inputs, rng);
    const CrossbarProgram prog = program_crossbar(m.params, cfg);
    std::mt19937_64 noise(trial);
    const auto xb = crossbar_forward(prog, m.out, seq, cfg, noise);
    const auto fl = forward_sequence(reconstruct_weights(prog), m.out, seq,
                                     LstmState::zeros(dims.n_hidden));
    for (std::size_t t = 0; t < seq.size(); ++t) {
      worst = std::max(worst, std::abs(xb.predictions[t] - fl.predictions[t]));
    }
  }
  return {worst <= 1e-9, fmt::format("max deviation {:.3e}", worst)};
}

Outcome quantizer_bound() {
  Outcome o;
  for (auto spacing : {LevelSpacing::uniform_conductance, LevelSpacing::uniform_resistance}) {
    const LevelSet levels = build_level_set(spacing);
    double max_gap = 0.0;
    for (std::size_t k = 1; k < LevelSet::kCount; ++k) {
      max_gap = std::max(max_gap, levels.weight_of(k) - levels.weight_of(k - 1));
    }
    const double bound = spacing == LevelSpacing::uniform_conductance ? 1.0 / 30.0 + 1e-12
                                                                      : 0.5 * max_gap + 1e-12;
    double worst = 0.0, prev = -2.0;
    bool monotone = true, idempotent = true;
    for (int k = -1000; k <= 1000; ++k) {
      const double w = k * 1e-3;
      const double q = quantize_weight(w, levels);
      worst = std::max(worst, std::abs(q - w));
      monotone = monotone && q >= prev;
      idempotent = idempotent && quantize_weight(q, levels) == q;
      prev = q;
    }
    const bool ok = worst <= bound && monotone && idempotent;
    o.passed = o.passed && ok;
    o.detail += fmt::format("{}{}: max error {:.6f} (bound {:.6f}), monotone {}, idempotent {}",
                            o.detail.empty() ? "" : "; ", to_string(spacing), worst, bound,
                            monotone, idempotent);
  }
  return o;
}

struct SeedOutcome {
  std::uint64_t seed;
  SplitRmse float_rmse;
  SplitRmse quantized;
};

// Shared by criteria 4 and 5.
const std::vector<SeedOutcome>& seed_runs() {
  static const std::vector<SeedOutcome> runs = [] {
    std::vector<SeedOutcome> out;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const RunConfig cfg = airline_config(scratch("seed" + std::to_string(seed)), seed);
      std::ostringstream log;
      cmd_train(cfg, log);
      const EvaluateSummary e = cmd_evaluate(cfg, log);
      out.push_back({seed, e.float_rmse, e.quantized_mean});
    }
    return out;
  }();
  return runs;
}

Outcome experiment_band() {
  std::vector<double> train, test;
  std::string per_seed;
  for (const auto& r : seed_runs()) {
    train.push_back(r.float_rmse.train.passengers);
    test.push_back(r.float_rmse.test.passengers);
    per_seed += fmt::format(" [{}: {:.2f}/{:.2f}]", r.seed, train.back(), test.back());
  }
  const double mtr = median(train), mte = median(test);
  const bool ok = mtr >= 15 && mtr <= 40 && mte >= 35 && mte <= 70;
  return {ok, fmt::format("median train {:.2f} in [15,40], test {:.2f} in [35,70];{}", mtr, mte,
                          per_seed)};
}

Outcome quantization_impact() {
  Outcome o;
  for (const auto& r : seed_runs()) {
    const double dtr = r.quantized.train.passengers - r.float_rmse.train.passengers;
    const double dte = r.quantized.test.passengers - r.float_rmse.test.passengers;
    o.passed = o.passed && std::abs(dtr) <= 15 && std::abs(dte) <= 15;
    auto dir = [](double d) { return d > 0 ? "worse" : d < 0 ? "better" : "unchanged"; };
    o.detail += fmt::format("{}seed {}: train {:+.2f} ({}), test {:+.2f} ({})",
                            o.detail.empty() ? "" : "; ", r.seed, dtr, dir(dtr), dte, dir(dte));
  }
  return o;
}

Outcome determinism() {
  struct Variant {
    std::string name;
    KeyValues overrides;
  };
  const std::vector<Variant> variants = {
      {"ideal", {}},
      {"noisy", {{"read-noise", "0.03"}, {"level-variation", "0.02"}, {"eval-seeds", "3"},
                 {"format", "delimited"}, {"weight-layout", "packed"}, {"shuffle", "true"},
                 {"quantize-output", "true"}}},
  };
  using Command = std::function<void(const RunConfig&, std::ostream&)>;
  const std::vector<std::pair<std::string, Command>> commands = {
      {"train", [](const RunConfig& c, std::ostream& l) { cmd_train(c, l); }},
      {"quantize", [](const RunConfig& c, std::ostream& l) { cmd_quantize(c, l); }},
      {"evaluate", [](const RunConfig& c, std::ostream& l) { cmd_evaluate(c, l); }},
      {"plot-data", [](const RunConfig& c, std::ostream& l) { cmd_plotdata(c, l); }},
  };
  std::size_t files_checked = 0;
  for (const auto& v : variants) {
    KeyValues kv = v.overrides;
    kv["dataset"] = kAirline;
    kv["out-dir"] = scratch("determinism_" + v.name).string();
    kv["epochs"] = "30";
    const RunConfig cfg = make_run_config(kv);
    for (const auto& [name, run] : commands) {
      std::ostringstream first_log, second_log;
      run(cfg, first_log);
      const auto first = snapshot(cfg.out_dir);
      run(cfg, second_log);
      const auto second = snapshot(cfg.out_dir);
      if (first != second || first_log.str() != second_log.str()) {
        return {false, fmt::format("{} ({}) output differs between runs", name, v.name)};
      }
      files_checked += first.size();
    }
  }
  return {true, fmt::format("{} file comparisons identical", files_checked)};
}

Outcome round_trips() {
  std::mt19937_64 rng(707);
  for (int trial = 0; trial < 50; ++trial) {
    const Dims dims{1 + rng() % 3, 1 + rng() % 6};
    const Model m = random_model(dims, rng, 1.2);
    for (auto layout : {WeightLayout::per_gate, WeightLayout::packed}) {
      std::ostringstream a;
      write_weights(a, m, layout);
      std::istringstream in(a.str());
      std::ostringstream b;
      write_weights(b, read_weights(in), layout);
      if (a.str() != b.str()) return {false, fmt::format("weight file {} differs", trial)};
    }
    CrossbarConfig cfg;
    cfg.levels = build_level_set(trial % 2 ? LevelSpacing::uniform_resistance
                                           : LevelSpacing::uniform_conductance);
    cfg.level_variation_sigma = trial % 3 == 0 ? 0.05 : 0.0;
    cfg.seed = static_cast<std::uint64_t>(trial);
    std::ostringstream a;
    write_program(a, program_crossbar(m.params, cfg));
    std::istringstream in(a.str());
    std::ostringstream b;
    write_program(b, read_program(in));
    if (a.str() != b.str()) return {false, fmt::format("program file {} differs", trial)};
  }
  return {true, "50 models, weights in both layouts and programs re-export identically"};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "gradient check", 10.0, gradient_check},
      {2, "crossbar matches float on reconstructed weights", 5.0, crossbar_equivalence},
      {3, "quantizer error bound, monotone, idempotent", 1.0, quantizer_bound},
      {4, "airline RMSE band over 5 seeds", 120.0, experiment_band},
      {5, "quantization impact within 15 passengers", 0.0, quantization_impact},
      {6, "byte-identical reruns", 0.0, determinism},
      {7, "file format round trips", 0.0, round_trips},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.time_limit_s > 0 && secs > c.time_limit_s) {
      o.passed = false;
      o.detail += fmt::format("; exceeded {:.0f} s", c.time_limit_s);
    }
    failures += !o.passed;
    std::cout << fmt::format("[{}] {} {} ({:.2f} s): {}\n", o.passed ? "PASS" : "FAIL", c.id,
                             c.title, secs, o.detail);
  }
  std::cout << fmt::format("{} of {} criteria passed\n", criteria.size() - failures,
                           criteria.size());
  return failures == 0 ? 0 : 1;
}
