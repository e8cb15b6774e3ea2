#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "memlstm/data.hpp"
#include "memlstm/lstm.hpp"

namespace memlstm {

enum class OptimizerKind { sgd, adam };

struct TrainConfig {
  std::size_t epochs = 100;
  double learning_rate = 0.01;
  OptimizerKind optimizer = OptimizerKind::adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double clamp_low = -1.0;
  double clamp_high = 1.0;
  std::uint64_t seed = 7;
  bool shuffle = false;

  void validate() const;
};

/// Gradients share the parameter types, so every shape is congruent by
/// construction.
struct GradientSet {
  LstmParams lstm;
  OutputLayer out;
};

struct GradientResult {
  GradientSet grads;
  double loss = 0.0;
};

/// Thrown when the training loss stops being finite.
class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(std::size_t epoch, double loss);
  std::size_t epoch() const { return epoch_; }

 private:
  std::size_t epoch_;
};

double mse_loss(std::span<const double> predictions, std::span<const double> targets);

/// Mean squared error of the final-step prediction of every window, and its
/// exact gradient by backpropagation through all time steps of each window.
/// Each window starts from a zero state.
GradientResult bptt_gradients(const LstmParams& params, const OutputLayer& out,
                              const WindowedSeries& batch);

/// Forward-only loss, matching the value bptt_gradients reports.
double batch_loss(const LstmParams& params, const OutputLayer& out,
                  const WindowedSeries& batch);

/// Glorot-uniform input and recurrent weights, zero biases except a forget
/// bias of one, zero output bias. Uses only the raw 64-bit engine output so
/// results do not depend on the standard library's distributions.
void initialize(LstmParams& params, OutputLayer& out, std::mt19937_64& rng);

struct TrainResult {
  LstmParams params;
  OutputLayer out;
  std::vector<double> loss_history;  // full-batch loss before each epoch's update
};

TrainResult train(const Dims& dims, const WindowedSeries& dataset, const TrainConfig& cfg);

struct GroupCheck {
  std::string name;
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;
  std::size_t compared = 0;  // entries large enough to enter the relative test
};

struct GradientCheckReport {
  std::vector<GroupCheck> groups;
  double max_relative_error = 0.0;
  bool passed = true;
};

/// Compares analytic against central-difference gradients. An entry enters the
/// relative test when both magnitudes exceed `floor`; smaller entries must
/// agree to `floor` in absolute terms.
GradientCheckReport compare_gradients(const GradientSet& analytic, const LstmParams& params,
                                      const OutputLayer& out, const WindowedSeries& batch,
                                      double step, double tolerance, double floor = 1e-8);

GradientCheckReport finite_difference_check(const LstmParams& params, const OutputLayer& out,
                                            const WindowedSeries& batch, double step,
                                            double tolerance);

}  // namespace memlstm
