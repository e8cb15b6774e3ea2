#include "memlstm/lstm.hpp"

#include <cmath>
#include <stdexcept>

namespace memlstm {

void Dims::validate() const {
  if (n_inputs < 1) throw std::invalid_argument("n_inputs must be at least 1");
  if (n_hidden < 1) throw std::invalid_argument("n_hidden must be at least 1");
}

LstmParams::LstmParams(Dims d) : dims(d) {
  for (auto& g : gates) {
    g.W = Matrix(d.n_inputs, d.n_hidden);
    g.U = Matrix(d.n_hidden, d.n_hidden);
    g.b = Vector(d.n_hidden, 0.0);
  }
}

void LstmParams::check_shapes() const {
  for (Gate g : kGates) {
    const std::string suffix(1, gate_suffix(g));
    require_shape(gate(g).W, dims.n_inputs, dims.n_hidden, "W_" + suffix);
    require_shape(gate(g).U, dims.n_hidden, dims.n_hidden, "U_" + suffix);
    require_size(gate(g).b.size(), dims.n_hidden, "b_" + suffix);
  }
}

const Vector& GateActivations::of(Gate g) const {
  switch (g) {
    case Gate::input: return i;
    case Gate::forget: return f;
    case Gate::cell: return c_tilde;
    case Gate::output: break;
  }
  return o;
}

Vector& GateActivations::of(Gate g) {
  return const_cast<Vector&>(std::as_const(*this).of(g));
}

double sigmoid(double x) {
  // Split on sign so exp never overflows.
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double tanh_act(double x) { return std::tanh(x); }

StepResult lstm_step(const LstmParams& params, std::span<const double> x_t,
                     const LstmState& prev) {
  params.check_shapes();
  const std::size_t N = params.dims.n_inputs;
  const std::size_t M = params.dims.n_hidden;
  require_size(x_t.size(), N, "x_t");
  require_size(prev.h.size(), M, "prev.h");
  require_size(prev.C.size(), M, "prev.C");

  StepResult r;
  for (Gate g : kGates) {
    const GateWeights& gw = params.gate(g);
    Vector pre = gw.b;
    for (std::size_t n = 0; n < N; ++n) {
      const double x = x_t[n];
      for (std::size_t m = 0; m < M; ++m) pre[m] += x * gw.W(n, m);
    }
    for (std::size_t k = 0; k < M; ++k) {
      const double h = prev.h[k];
      for (std::size_t m = 0; m < M; ++m) pre[m] += h * gw.U(k, m);
    }
    for (double& v : pre) v = (g == Gate::cell) ? tanh_act(v) : sigmoid(v);
    r.gates.of(g) = std::move(pre);
  }

  r.state.C.resize(M);
  r.state.h.resize(M);
  for (std::size_t m = 0; m < M; ++m) {
    r.state.C[m] = r.gates.f[m] * prev.C[m] + r.gates.i[m] * r.gates.c_tilde[m];
    r.state.h[m] = r.gates.o[m] * tanh_act(r.state.C[m]);
  }
  return r;
}

double dense_output(std::span<const double> h, const OutputLayer& out) {
  require_size(out.w_out.size(), h.size(), "w_out");
  double y = out.b_out;
  for (std::size_t m = 0; m < h.size(); ++m) y += out.w_out[m] * h[m];
  return y;
}

SequenceResult forward_sequence(const LstmParams& params, const OutputLayer& out,
                                std::span<const Vector> inputs, const LstmState& initial) {
  SequenceResult r{{}, initial};
  r.predictions.reserve(inputs.size());
  for (const Vector& x : inputs) {
    r.final_state = lstm_step(params, x, r.final_state).state;
    r.predictions.push_back(dense_output(r.final_state.h, out));
  }
  return r;
}

double predict_window(const LstmParams& params, const OutputLayer& out,
                      std::span<const double> window) {
  if (window.empty()) throw std::invalid_argument("predict_window: empty window");
  const std::size_t N = params.dims.n_inputs;
  if (window.size() % N != 0) throw DimensionError("window: length not a multiple of n_inputs");
  std::vector<Vector> steps;
  for (std::size_t t = 0; t < window.size(); t += N) {
    steps.emplace_back(window.begin() + static_cast<std::ptrdiff_t>(t),
                       window.begin() + static_cast<std::ptrdiff_t>(t + N));
  }
  return forward_sequence(params, out, steps, LstmState::zeros(params.dims.n_hidden))
      .predictions.back();
}

namespace {

template <typename Group, typename Params, typename Out>
std::vector<Group> collect_groups(Params& params, Out& out) {
  std::vector<Group> groups;
  const std::size_t N = params.dims.n_inputs;
  const std::size_t M = params.dims.n_hidden;
  for (Gate g : kGates) {
    groups.push_back({std::string("W_") + gate_suffix(g), N, M, params.gate(g).W.values()});
  }
  for (Gate g : kGates) {
    groups.push_back({std::string("U_") + gate_suffix(g), M, M, params.gate(g).U.values()});
  }
  for (Gate g : kGates) {
    groups.push_back({std::string("b_") + gate_suffix(g), 1, M, params.gate(g).b});
  }
  groups.push_back({"w_out", out.w_out.size(), 1, out.w_out});
  groups.push_back({"b_out", 1, 1, {&out.b_out, 1}});
  return groups;
}

}  // namespace

std::vector<ParamGroup> param_groups(LstmParams& params, OutputLayer& out) {
  return collect_groups<ParamGroup>(params, out);
}

std::vector<ConstParamGroup> param_groups(const LstmParams& params, const OutputLayer& out) {
  return collect_groups<ConstParamGroup>(params, out);
}

}  // namespace memlstm
