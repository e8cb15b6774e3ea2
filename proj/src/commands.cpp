#include "memlstm/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <fmt/format.h>

namespace memlstm {

namespace fs = std::filesystem;

Experiment prepare_experiment(const RunConfig& cfg) {
  Experiment e;
  e.series = load_series(cfg.dataset);
  e.normalizer = fit_normalizer(e.series);
  e.windows = make_windows(normalize(e.series, e.normalizer), cfg.look_back);
  e.parts = split(cfg.split, e.windows);
  return e;
}

Vector predict_float(const Model& model, const WindowedSeries& ws) {
  Vector p;
  p.reserve(ws.size());
  for (const Sample& s : ws.samples) p.push_back(predict_window(model.params, model.out, s.input));
  return p;
}

Vector predict_crossbar(const CrossbarProgram& program, const OutputLayer& out,
                        const WindowedSeries& ws, const CrossbarConfig& cfg,
                        std::mt19937_64& rng) {
  Vector p;
  p.reserve(ws.size());
  for (const Sample& s : ws.samples) {
    p.push_back(crossbar_predict_window(program, out, s.input, cfg, rng));
  }
  return p;
}

Rmse score(const Vector& predictions, const WindowedSeries& ws, const Normalizer& n) {
  Vector targets;
  targets.reserve(ws.size());
  for (const Sample& s : ws.samples) targets.push_back(s.target);
  return {rmse(predictions, targets), rmse(predictions, targets, n)};
}

CrossbarConfig crossbar_for_seed(const RunConfig& cfg, std::size_t k) {
  CrossbarConfig c = cfg.crossbar;
  c.seed = cfg.crossbar.seed + k;
  return c;
}

std::uint64_t read_noise_seed(std::uint64_t crossbar_seed) {
  // Keeps the read-noise stream apart from the programming-variation stream.
  return crossbar_seed ^ 0x9e3779b97f4a7c15ULL;
}

namespace {

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  auto out = open_output(path);
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

void check_model(const Model& model, const RunConfig& cfg) {
  if (model.params.dims.n_inputs != cfg.dims.n_inputs) {
    throw std::invalid_argument(fmt::format("weights have {} inputs per step; the data feeds {}",
                                            model.params.dims.n_inputs, cfg.dims.n_inputs));
  }
}

CrossbarProgram resolve_program(const RunConfig& cfg, const Model& model,
                                const CrossbarConfig& xcfg) {
  if (!cfg.program) return program_crossbar(model.params, xcfg);
  std::ifstream in(*cfg.program);
  if (!in) throw std::runtime_error("cannot open program file " + cfg.program->string());
  CrossbarProgram prog = read_program(in);
  if (!(prog.dims() == model.params.dims)) {
    throw std::invalid_argument(fmt::format(
        "program is {}x{} (inputs x hidden) but weights are {}x{}", prog.dims().n_inputs,
        prog.dims().n_hidden, model.params.dims.n_inputs, model.params.dims.n_hidden));
  }
  return prog;
}

std::string rmse_report(const RunConfig& cfg, const std::vector<std::string>& columns,
                        const std::vector<std::pair<std::string, std::vector<double>>>& rows) {
  std::string s;
  if (cfg.format == ReportFormat::delimited) {
    s += "metric";
    for (const auto& c : columns) s += "," + c;
    s += '\n';
    for (const auto& [name, values] : rows) {
      s += name;
      for (double v : values) s += fmt::format(",{:.17g}", v);
      s += '\n';
    }
    return s;
  }
  s += fmt::format("{:<28}", "metric");
  for (const auto& c : columns) s += fmt::format("{:>16}", c);
  s += '\n';
  for (const auto& [name, values] : rows) {
    s += fmt::format("{:<28}", name);
    for (double v : values) s += fmt::format("{:>16.6f}", v);
    s += '\n';
  }
  return s;
}

}  // namespace

TrainSummary cmd_train(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const Experiment e = prepare_experiment(cfg);
  TrainResult tr = train(cfg.dims, e.parts.train, cfg.train);

  TrainSummary s{{std::move(tr.params), std::move(tr.out)}, std::move(tr.loss_history), {}};
  s.rmse.train = score(predict_float(s.model, e.parts.train), e.parts.train, e.normalizer);
  s.rmse.test = score(predict_float(s.model, e.parts.test), e.parts.test, e.normalizer);

  save_weights(cfg.weights_path(), s.model, cfg.weight_layout);

  std::string loss = "epoch,loss\n";
  for (std::size_t k = 0; k < s.loss_history.size(); ++k) {
    loss += fmt::format("{},{:.17g}\n", k + 1, s.loss_history[k]);
  }
  write_text(cfg.out_dir / "loss_history.csv", loss);

  const std::string report = rmse_report(
      cfg, {"normalized", "passengers"},
      {{"train_rmse", {s.rmse.train.normalized, s.rmse.train.passengers}},
       {"test_rmse", {s.rmse.test.normalized, s.rmse.test.passengers}}});
  const std::string report_text =
      report + fmt::format("final loss {:.17g} after {} epochs\n", s.loss_history.back(),
                           s.loss_history.size());
  write_text(cfg.out_dir / "train_report.txt", report_text);
  log << report_text;
  return s;
}

QuantizeSummary cmd_quantize(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const Model model = load_weights(cfg.weights_path());

  QuantizeSummary s;
  s.program = program_crossbar(model.params, cfg.crossbar);
  s.quantized.params = reconstruct_weights(s.program);
  s.quantized.out = cfg.crossbar.quantize_output_layer
                        ? quantize_output_layer(model.out, cfg.crossbar.levels)
                        : model.out;

  std::string report = "group,entries,max_abs_error,mean_abs_error\n";
  double total = 0.0;
  std::size_t count = 0;
  const auto before = param_groups(model.params, model.out);
  const auto after = param_groups(s.quantized.params, s.quantized.out);
  for (std::size_t g = 0; g < before.size(); ++g) {
    const bool on_array = before[g].name != "w_out" && before[g].name != "b_out";
    if (!on_array && !cfg.crossbar.quantize_output_layer) continue;
    double group_max = 0.0, group_sum = 0.0;
    for (std::size_t k = 0; k < before[g].values.size(); ++k) {
      const double err = std::abs(after[g].values[k] - before[g].values[k]);
      group_max = std::max(group_max, err);
      group_sum += err;
    }
    const auto n = before[g].values.size();
    report += fmt::format("{},{},{:.17g},{:.17g}\n", before[g].name, n, group_max,
                          group_sum / static_cast<double>(n));
    s.max_abs_error = std::max(s.max_abs_error, group_max);
    total += group_sum;
    count += n;
  }
  s.mean_abs_error = total / static_cast<double>(count);
  report += fmt::format("all,{},{:.17g},{:.17g}\n", count, s.max_abs_error, s.mean_abs_error);
  for (const auto& c : s.program.clamped) {
    report += fmt::format("clamped,{}[{},{}],{:.17g}\n", c.name, c.row, c.col, c.value);
  }

  {
    auto out = open_output(cfg.out_dir / "program.txt");
    write_program(out, s.program);
  }
  save_weights(cfg.out_dir / "quantized_weights.txt", s.quantized, cfg.weight_layout);
  write_text(cfg.out_dir / "quantization_report.txt", report);

  for (const auto& c : s.program.clamped) {
    log << fmt::format("warning: {}[{},{}] = {} outside [-1, 1], clamped\n", c.name, c.row,
                       c.col, c.value);
  }
  log << fmt::format("programmed {} rows x {} physical columns ({} spacing)\n",
                     s.program.rows(), s.program.physical_columns(),
                     to_string(cfg.crossbar.levels.spacing));
  log << fmt::format("quantization error: max {:.6f}, mean {:.6f} over {} weights\n",
                     s.max_abs_error, s.mean_abs_error, count);
  return s;
}

namespace {

struct SeedRun {
  SplitRmse rmse;
  Vector train_pred;
  Vector test_pred;
};

SeedRun run_seed(const RunConfig& cfg, const Model& model, const Experiment& e, std::size_t k) {
  const CrossbarConfig xcfg = crossbar_for_seed(cfg, k);
  const CrossbarProgram prog = resolve_program(cfg, model, xcfg);
  std::mt19937_64 rng(read_noise_seed(xcfg.seed));
  SeedRun r;
  r.train_pred = predict_crossbar(prog, model.out, e.parts.train, xcfg, rng);
  r.test_pred = predict_crossbar(prog, model.out, e.parts.test, xcfg, rng);
  r.rmse.train = score(r.train_pred, e.parts.train, e.normalizer);
  r.rmse.test = score(r.test_pred, e.parts.test, e.normalizer);
  return r;
}

}  // namespace

EvaluateSummary cmd_evaluate(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const Experiment e = prepare_experiment(cfg);
  const Model model = load_weights(cfg.weights_path());
  check_model(model, cfg);

  EvaluateSummary s;
  const Vector float_train = predict_float(model, e.parts.train);
  const Vector float_test = predict_float(model, e.parts.test);
  s.float_rmse.train = score(float_train, e.parts.train, e.normalizer);
  s.float_rmse.test = score(float_test, e.parts.test, e.normalizer);

  // Seeds are independent; each worker owns a disjoint set of result slots.
  std::vector<SeedRun> runs(cfg.eval_seeds);
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const std::size_t workers =
      std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, cfg.eval_seeds);
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t k = w; k < cfg.eval_seeds; k += workers) {
            runs[k] = run_seed(cfg, model, e, k);
          }
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);

  auto stats = [&](auto field) {
    Rmse mean, sd;
    const double n = static_cast<double>(runs.size());
    for (const auto& r : runs) {
      mean.normalized += field(r.rmse).normalized / n;
      mean.passengers += field(r.rmse).passengers / n;
    }
    if (runs.size() > 1) {
      for (const auto& r : runs) {
        sd.normalized += std::pow(field(r.rmse).normalized - mean.normalized, 2) / (n - 1);
        sd.passengers += std::pow(field(r.rmse).passengers - mean.passengers, 2) / (n - 1);
      }
      sd.normalized = std::sqrt(sd.normalized);
      sd.passengers = std::sqrt(sd.passengers);
    }
    return std::pair{mean, sd};
  };
  std::tie(s.quantized_mean.train, s.quantized_std.train) =
      stats([](const SplitRmse& r) { return r.train; });
  std::tie(s.quantized_mean.test, s.quantized_std.test) =
      stats([](const SplitRmse& r) { return r.test; });
  for (std::size_t k = 0; k < runs.size(); ++k) {
    s.quantized.push_back({crossbar_for_seed(cfg, k).seed, runs[k].rmse});
  }

  const SplitRmse& f = s.float_rmse;
  const SplitRmse& q = s.quantized_mean;
  const SplitRmse& sd = s.quantized_std;
  std::string report = rmse_report(
      cfg, {"float", "quantized", "quantized_std", "delta"},
      {{"train_rmse_normalized",
        {f.train.normalized, q.train.normalized, sd.train.normalized,
         q.train.normalized - f.train.normalized}},
       {"test_rmse_normalized",
        {f.test.normalized, q.test.normalized, sd.test.normalized,
         q.test.normalized - f.test.normalized}},
       {"train_rmse_passengers",
        {f.train.passengers, q.train.passengers, sd.train.passengers,
         q.train.passengers - f.train.passengers}},
       {"test_rmse_passengers",
        {f.test.passengers, q.test.passengers, sd.test.passengers,
         q.test.passengers - f.test.passengers}}});
  report += fmt::format("seeds {}, read noise {}, level variation {}, output layer {}\n",
                        cfg.eval_seeds, cfg.crossbar.read_noise_sigma,
                        cfg.crossbar.level_variation_sigma,
                        cfg.crossbar.quantize_output_layer ? "quantized" : "ideal");
  write_text(cfg.out_dir / "evaluation.txt", report);
  log << report;

  std::string csv = "split,index,target,float_prediction,quantized_prediction\n";
  // Targets come from the raw series so they carry no normalization round-off.
  auto dump = [&](const char* name, std::size_t first_point, const Vector& fp, const Vector& qp) {
    for (std::size_t k = 0; k < fp.size(); ++k) {
      csv += fmt::format("{},{},{:.17g},{:.17g},{:.17g}\n", name, k,
                         e.series.values[first_point + k], e.normalizer.invert(fp[k]),
                         e.normalizer.invert(qp[k]));
    }
  };
  dump("train", cfg.look_back, float_train, runs.front().train_pred);
  dump("test", cfg.look_back + e.parts.train.size(), float_test, runs.front().test_pred);
  write_text(cfg.out_dir / "eval_predictions.csv", csv);
  return s;
}

void cmd_plotdata(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const fs::path loss_path = cfg.out_dir / "loss_history.csv";
  std::ifstream loss_in(loss_path);
  if (!loss_in) throw std::runtime_error("missing " + loss_path.string() + "; run `train` first");

  const Experiment e = prepare_experiment(cfg);
  const Model model = load_weights(cfg.weights_path());
  check_model(model, cfg);
  const SeedRun q = run_seed(cfg, model, e, 0);
  const Vector float_train = predict_float(model, e.parts.train);
  const Vector float_test = predict_float(model, e.parts.test);

  Vector float_all = float_train;
  float_all.insert(float_all.end(), float_test.begin(), float_test.end());
  Vector quant_all = q.train_pred;
  quant_all.insert(quant_all.end(), q.test_pred.begin(), q.test_pred.end());

  std::string csv = "time_index,label,split,actual,float_prediction,quantized_prediction\n";
  const std::size_t n = e.series.values.size();
  const std::size_t n_train = e.parts.train.size();
  for (std::size_t t = 0; t < n; ++t) {
    const std::string label = t < e.series.labels.size() ? e.series.labels[t] : "";
    csv += fmt::format("{},{},", t, label);
    if (t < cfg.look_back) {
      csv += fmt::format("none,{:.17g},,\n", e.series.values[t]);
      continue;
    }
    const std::size_t k = t - cfg.look_back;  // window whose target is point t
    csv += fmt::format("{},{:.17g},{:.17g},{:.17g}\n", k < n_train ? "train" : "test",
                       e.series.values[t], e.normalizer.invert(float_all[k]),
                       e.normalizer.invert(quant_all[k]));
  }
  write_text(cfg.out_dir / "plot_predictions.csv", csv);

  // Re-emit the loss history after validating it.
  std::string loss = "epoch,loss\n";
  std::string line;
  std::getline(loss_in, line);
  if (line != "epoch,loss") throw ParseError("loss history header", 1);
  std::size_t line_no = 1, epochs = 0;
  while (std::getline(loss_in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::size_t epoch = 0;
    char comma = 0;
    double value = 0.0;
    if (!(row >> epoch >> comma >> value) || comma != ',') {
      throw ParseError("expected `epoch,loss`", line_no);
    }
    loss += line + '\n';
    ++epochs;
  }
  write_text(cfg.out_dir / "plot_loss.csv", loss);
  log << fmt::format("wrote {} prediction rows and {} loss rows to {}\n", n, epochs,
                     cfg.out_dir.string());
}

}  // namespace memlstm
