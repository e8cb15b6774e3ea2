#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "memlstm/lstm.hpp"
#include "memlstm/weights_io.hpp"

namespace memlstm::testing {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

inline Model random_model(Dims dims, std::mt19937_64& rng, double scale = 1.0) {
  Model m{LstmParams(dims), OutputLayer::zeros(dims.n_hidden)};
  for (auto& g : param_groups(m.params, m.out)) {
    for (double& v : g.values) v = uniform(rng, -scale, scale);
  }
  return m;
}

inline Vector random_vector(std::size_t n, std::mt19937_64& rng, double lo = -1.0,
                            double hi = 1.0) {
  Vector v(n);
  for (double& x : v) x = uniform(rng, lo, hi);
  return v;
}

/// Scalar-loop evaluation of the cell equations, written independently of
/// lstm_step: one unit at a time, each gate spelled out.
struct NaiveStep {
  Vector i, f, g, o, C, h;
};

inline NaiveStep naive_lstm_step(const LstmParams& p, const Vector& x, const Vector& h_prev,
                                 const Vector& C_prev) {
  const std::size_t N = p.dims.n_inputs;
  const std::size_t M = p.dims.n_hidden;
  auto logistic = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
  auto preact = [&](Gate gate, std::size_t m) {
    const GateWeights& gw = p.gates[static_cast<std::size_t>(gate)];
    double z = gw.b[m];
    for (std::size_t n = 0; n < N; ++n) z += gw.W(n, m) * x[n];
    for (std::size_t k = 0; k < M; ++k) z += gw.U(k, m) * h_prev[k];
    return z;
  };
  NaiveStep s;
  for (std::size_t m = 0; m < M; ++m) {
    const double i = logistic(preact(Gate::input, m));
    const double f = logistic(preact(Gate::forget, m));
    const double g = std::tanh(preact(Gate::cell, m));
    const double o = logistic(preact(Gate::output, m));
    const double C = f * C_prev[m] + i * g;
    s.i.push_back(i);
    s.f.push_back(f);
    s.g.push_back(g);
    s.o.push_back(o);
    s.C.push_back(C);
    s.h.push_back(o * std::tanh(C));
  }
  return s;
}

inline double naive_dot(const Vector& a, const Vector& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

}  // namespace memlstm::testing
