#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "memlstm/matrix.hpp"

namespace memlstm {

/// Gate order used everywhere a [., 4M] packing appears: input, forget,
/// cell candidate, output.
enum class Gate : std::size_t { input = 0, forget = 1, cell = 2, output = 3 };

inline constexpr std::array<Gate, 4> kGates = {Gate::input, Gate::forget, Gate::cell,
                                               Gate::output};
inline constexpr std::size_t kGateCount = 4;

constexpr std::size_t index(Gate g) { return static_cast<std::size_t>(g); }

/// Single-letter suffix used in weight names and crossbar column labels.
constexpr char gate_suffix(Gate g) {
  constexpr char suffixes[] = {'i', 'f', 'c', 'o'};
  return suffixes[index(g)];
}

struct Dims {
  std::size_t n_inputs = 1;
  std::size_t n_hidden = 4;

  /// Throws std::invalid_argument unless both counts are at least one.
  void validate() const;
  bool operator==(const Dims&) const = default;
};

/// Weights feeding one gate. Pre-activation for unit m is
///   sum_n x[n] * W(n, m) + sum_k h[k] * U(k, m) + b[m].
struct GateWeights {
  Matrix W;  // [n_inputs x n_hidden]
  Matrix U;  // [n_hidden x n_hidden]
  Vector b;  // [n_hidden]

  bool operator==(const GateWeights&) const = default;
};

struct LstmParams {
  Dims dims;
  std::array<GateWeights, kGateCount> gates;

  LstmParams() : LstmParams(Dims{}) {}
  /// Zero-initialized parameters of the given dimensions.
  explicit LstmParams(Dims d);

  GateWeights& gate(Gate g) { return gates[index(g)]; }
  const GateWeights& gate(Gate g) const { return gates[index(g)]; }

  /// Throws DimensionError if any matrix disagrees with dims.
  void check_shapes() const;

  bool operator==(const LstmParams&) const = default;
};

struct LstmState {
  Vector h;
  Vector C;

  static LstmState zeros(std::size_t n_hidden) {
    return {Vector(n_hidden, 0.0), Vector(n_hidden, 0.0)};
  }
  bool operator==(const LstmState&) const = default;
};

struct GateActivations {
  Vector i;
  Vector f;
  Vector c_tilde;
  Vector o;

  const Vector& of(Gate g) const;
  Vector& of(Gate g);
};

/// Dense readout with no activation: y = w_out . h + b_out.
struct OutputLayer {
  Vector w_out;
  double b_out = 0.0;

  static OutputLayer zeros(std::size_t n_hidden) { return {Vector(n_hidden, 0.0), 0.0}; }
  bool operator==(const OutputLayer&) const = default;
};

double sigmoid(double x);
double tanh_act(double x);

struct StepResult {
  GateActivations gates;
  LstmState state;
};

StepResult lstm_step(const LstmParams& params, std::span<const double> x_t,
                     const LstmState& prev);

double dense_output(std::span<const double> h, const OutputLayer& out);

struct SequenceResult {
  Vector predictions;
  LstmState final_state;
};

/// Runs lstm_step then dense_output for every element of inputs, threading the
/// state. An empty input returns no predictions and the initial state.
SequenceResult forward_sequence(const LstmParams& params, const OutputLayer& out,
                                std::span<const Vector> inputs, const LstmState& initial);

/// Convenience: forward from a zero state and return only the last prediction.
double predict_window(const LstmParams& params, const OutputLayer& out,
                      std::span<const double> window);

/// A named, shaped view over one parameter tensor. The canonical ordering is
/// W_i W_f W_c W_o U_i U_f U_c U_o b_i b_f b_c b_o w_out b_out.
struct ParamGroup {
  std::string name;
  std::size_t rows;
  std::size_t cols;
  std::span<double> values;
};

struct ConstParamGroup {
  std::string name;
  std::size_t rows;
  std::size_t cols;
  std::span<const double> values;
};

std::vector<ParamGroup> param_groups(LstmParams& params, OutputLayer& out);
std::vector<ConstParamGroup> param_groups(const LstmParams& params, const OutputLayer& out);

}  // namespace memlstm
