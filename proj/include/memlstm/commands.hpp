#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "memlstm/crossbar.hpp"
#include "memlstm/data.hpp"
#include "memlstm/run_config.hpp"
#include "memlstm/weights_io.hpp"

namespace memlstm {

/// Dataset normalized over the whole series, windowed, then split.
struct Experiment {
  TimeSeries series;
  Normalizer normalizer;
  WindowedSeries windows;
  SplitResult parts;
};

Experiment prepare_experiment(const RunConfig& cfg);

struct Rmse {
  double normalized = 0.0;
  double passengers = 0.0;
};

struct SplitRmse {
  Rmse train;
  Rmse test;
};

Vector predict_float(const Model& model, const WindowedSeries& ws);
Vector predict_crossbar(const CrossbarProgram& program, const OutputLayer& out,
                        const WindowedSeries& ws, const CrossbarConfig& cfg,
                        std::mt19937_64& rng);
Rmse score(const Vector& predictions, const WindowedSeries& ws, const Normalizer& n);

struct TrainSummary {
  Model model;
  std::vector<double> loss_history;
  SplitRmse rmse;
};

/// Writes weights.txt, loss_history.csv and train_report.txt to out_dir.
TrainSummary cmd_train(const RunConfig& cfg, std::ostream& log);

struct QuantizeSummary {
  CrossbarProgram program;
  Model quantized;
  double max_abs_error = 0.0;
  double mean_abs_error = 0.0;
};

/// Writes program.txt, quantized_weights.txt and quantization_report.txt.
QuantizeSummary cmd_quantize(const RunConfig& cfg, std::ostream& log);

struct SeedResult {
  std::uint64_t seed;
  SplitRmse rmse;
};

struct EvaluateSummary {
  SplitRmse float_rmse;
  std::vector<SeedResult> quantized;  // one per non-ideality seed
  SplitRmse quantized_mean;
  SplitRmse quantized_std;
};

/// Compares the float model against its crossbar realization. Writes
/// evaluation.txt and eval_predictions.csv (first seed's predictions).
EvaluateSummary cmd_evaluate(const RunConfig& cfg, std::ostream& log);

/// Writes plot_predictions.csv (one row per series point) and plot_loss.csv.
void cmd_plotdata(const RunConfig& cfg, std::ostream& log);

/// Seeds used by the crossbar for non-ideality seed number k.
CrossbarConfig crossbar_for_seed(const RunConfig& cfg, std::size_t k);
std::uint64_t read_noise_seed(std::uint64_t crossbar_seed);

}  // namespace memlstm
