#include "memlstm/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace memlstm {

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("epochs must be at least 1");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (!(clamp_low < clamp_high)) throw std::invalid_argument("clamp range is empty");
  if (optimizer == OptimizerKind::adam) {
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
      throw std::invalid_argument("adam betas must lie in [0, 1)");
    }
    if (!(epsilon > 0.0)) throw std::invalid_argument("adam epsilon must be positive");
  }
}

TrainingDiverged::TrainingDiverged(std::size_t epoch, double loss)
    : std::runtime_error("training loss became " + std::to_string(loss) + " at epoch " +
                         std::to_string(epoch)),
      epoch_(epoch) {}

double mse_loss(std::span<const double> predictions, std::span<const double> targets) {
  if (predictions.size() != targets.size()) {
    throw DimensionError("mse_loss: predictions and targets differ in length");
  }
  if (predictions.empty()) throw std::invalid_argument("mse_loss: empty input");
  double sum = 0.0;
  for (std::size_t k = 0; k < predictions.size(); ++k) {
    const double d = predictions[k] - targets[k];
    sum += d * d;
  }
  return sum / static_cast<double>(predictions.size());
}

namespace {

std::vector<Vector> window_steps(const Sample& s, std::size_t n_inputs) {
  if (s.input.empty() || s.input.size() % n_inputs != 0) {
    throw DimensionError("window: length must be a positive multiple of n_inputs");
  }
  std::vector<Vector> steps;
  for (std::size_t t = 0; t < s.input.size(); t += n_inputs) {
    steps.emplace_back(s.input.begin() + static_cast<std::ptrdiff_t>(t),
                       s.input.begin() + static_cast<std::ptrdiff_t>(t + n_inputs));
  }
  return steps;
}

struct Tape {
  Vector x;
  LstmState prev;
  GateActivations gates;
  Vector tanh_C;
};

}  // namespace

double batch_loss(const LstmParams& params, const OutputLayer& out,
                  const WindowedSeries& batch) {
  if (batch.empty()) throw std::invalid_argument("batch_loss: empty batch");
  Vector preds, targets;
  for (const Sample& s : batch.samples) {
    preds.push_back(predict_window(params, out, s.input));
    targets.push_back(s.target);
  }
  return mse_loss(preds, targets);
}

GradientResult bptt_gradients(const LstmParams& params, const OutputLayer& out,
                              const WindowedSeries& batch) {
  if (batch.empty()) throw std::invalid_argument("bptt_gradients: empty batch");
  params.check_shapes();
  const std::size_t N = params.dims.n_inputs;
  const std::size_t M = params.dims.n_hidden;
  require_size(out.w_out.size(), M, "w_out");

  GradientResult r{{LstmParams(params.dims), OutputLayer::zeros(M)}, 0.0};
  const double scale = 1.0 / static_cast<double>(batch.size());

  for (const Sample& s : batch.samples) {
    const auto steps = window_steps(s, N);
    std::vector<Tape> tape;
    tape.reserve(steps.size());
    LstmState state = LstmState::zeros(M);
    for (const Vector& x : steps) {
      StepResult step = lstm_step(params, x, state);
      Vector tC(M);
      for (std::size_t m = 0; m < M; ++m) tC[m] = std::tanh(step.state.C[m]);
      tape.push_back({x, state, std::move(step.gates), std::move(tC)});
      state = std::move(step.state);
    }

    const double y = dense_output(state.h, out);
    const double err = y - s.target;
    r.loss += err * err * scale;
    const double dy = 2.0 * err * scale;

    for (std::size_t m = 0; m < M; ++m) r.grads.out.w_out[m] += dy * state.h[m];
    r.grads.out.b_out += dy;

    Vector dh(M), dC(M, 0.0);
    for (std::size_t m = 0; m < M; ++m) dh[m] = dy * out.w_out[m];

    std::array<Vector, kGateCount> dpre;
    for (auto& v : dpre) v.assign(M, 0.0);

    for (auto t = tape.rbegin(); t != tape.rend(); ++t) {
      const GateActivations& a = t->gates;
      for (std::size_t m = 0; m < M; ++m) {
        const double tc = t->tanh_C[m];
        dC[m] += dh[m] * a.o[m] * (1.0 - tc * tc);
        const double d_o = dh[m] * tc;
        const double d_i = dC[m] * a.c_tilde[m];
        const double d_g = dC[m] * a.i[m];
        const double d_f = dC[m] * t->prev.C[m];
        dpre[index(Gate::input)][m] = d_i * a.i[m] * (1.0 - a.i[m]);
        dpre[index(Gate::forget)][m] = d_f * a.f[m] * (1.0 - a.f[m]);
        dpre[index(Gate::cell)][m] = d_g * (1.0 - a.c_tilde[m] * a.c_tilde[m]);
        dpre[index(Gate::output)][m] = d_o * a.o[m] * (1.0 - a.o[m]);
        dC[m] *= a.f[m];
      }

      Vector dh_prev(M, 0.0);
      for (Gate g : kGates) {
        const Vector& da = dpre[index(g)];
        GateWeights& gg = r.grads.lstm.gate(g);
        const GateWeights& gw = params.gate(g);
        for (std::size_t n = 0; n < N; ++n) {
          for (std::size_t m = 0; m < M; ++m) gg.W(n, m) += t->x[n] * da[m];
        }
        for (std::size_t k = 0; k < M; ++k) {
          for (std::size_t m = 0; m < M; ++m) {
            gg.U(k, m) += t->prev.h[k] * da[m];
            dh_prev[k] += gw.U(k, m) * da[m];
          }
        }
        for (std::size_t m = 0; m < M; ++m) gg.b[m] += da[m];
      }
      dh = std::move(dh_prev);
    }
  }
  return r;
}

void initialize(LstmParams& params, OutputLayer& out, std::mt19937_64& rng) {
  const std::size_t N = params.dims.n_inputs;
  const std::size_t M = params.dims.n_hidden;
  auto uniform = [&rng](double limit) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1)
    return (2.0 * u - 1.0) * limit;
  };
  // The four gates are packed side by side, as a single [., 4M] kernel would be.
  const double w_limit = std::sqrt(6.0 / static_cast<double>(N + kGateCount * M));
  const double u_limit = std::sqrt(6.0 / static_cast<double>(M + kGateCount * M));
  for (Gate g : kGates) {
    GateWeights& gw = params.gate(g);
    for (double& v : gw.W.values()) v = uniform(w_limit);
    for (double& v : gw.U.values()) v = uniform(u_limit);
    std::fill(gw.b.begin(), gw.b.end(), g == Gate::forget ? 1.0 : 0.0);
  }
  out = OutputLayer::zeros(M);
  const double o_limit = std::sqrt(6.0 / static_cast<double>(M + 1));
  for (double& v : out.w_out) v = uniform(o_limit);
}

namespace {

class Optimizer {
 public:
  Optimizer(const TrainConfig& cfg, std::size_t n_params)
      : cfg_(cfg), m_(n_params, 0.0), v_(n_params, 0.0) {}

  void update(std::vector<ParamGroup>& params, const std::vector<ParamGroup>& grads) {
    ++step_;
    const double lr = cfg_.learning_rate;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
    std::size_t k = 0;
    for (std::size_t g = 0; g < params.size(); ++g) {
      auto p = params[g].values;
      auto d = grads[g].values;
      for (std::size_t e = 0; e < p.size(); ++e, ++k) {
        if (cfg_.optimizer == OptimizerKind::sgd) {
          p[e] -= lr * d[e];
        } else {
          m_[k] = cfg_.beta1 * m_[k] + (1.0 - cfg_.beta1) * d[e];
          v_[k] = cfg_.beta2 * v_[k] + (1.0 - cfg_.beta2) * d[e] * d[e];
          p[e] -= lr * (m_[k] / bc1) / (std::sqrt(v_[k] / bc2) + cfg_.epsilon);
        }
        p[e] = std::clamp(p[e], cfg_.clamp_low, cfg_.clamp_high);
      }
    }
  }

 private:
  TrainConfig cfg_;
  Vector m_;
  Vector v_;
  std::size_t step_ = 0;
};

}  // namespace

TrainResult train(const Dims& dims, const WindowedSeries& dataset, const TrainConfig& cfg) {
  dims.validate();
  cfg.validate();
  if (dataset.empty()) throw std::invalid_argument("train: empty dataset");

  std::mt19937_64 rng(cfg.seed);
  TrainResult r{LstmParams(dims), OutputLayer::zeros(dims.n_hidden), {}};
  initialize(r.params, r.out, rng);

  auto params = param_groups(r.params, r.out);
  for (auto& g : params) {
    for (double& v : g.values) v = std::clamp(v, cfg.clamp_low, cfg.clamp_high);
  }
  std::size_t n_params = 0;
  for (const auto& g : params) n_params += g.values.size();
  Optimizer opt(cfg, n_params);

  WindowedSeries batch = dataset;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (cfg.shuffle) {
      // Fisher-Yates on raw engine output; only the summation order changes
      // under full-batch updates.
      for (std::size_t k = batch.size(); k > 1; --k) {
        std::swap(batch.samples[k - 1], batch.samples[rng() % k]);
      }
    }
    GradientResult g = bptt_gradients(r.params, r.out, batch);
    if (!std::isfinite(g.loss)) throw TrainingDiverged(epoch, g.loss);
    r.loss_history.push_back(g.loss);
    auto grads = param_groups(g.grads.lstm, g.grads.out);
    opt.update(params, grads);
  }
  return r;
}

namespace {

/// batch_loss evaluated in extended precision. Central differences subtract
/// two nearly equal losses, so double rounding in the loss (about 1e-17) would
/// otherwise swamp gradients near 1e-8.
long double extended_batch_loss(const LstmParams& p, const OutputLayer& out,
                                const WindowedSeries& batch) {
  using Real = long double;
  const std::size_t N = p.dims.n_inputs;
  const std::size_t M = p.dims.n_hidden;
  auto sigmoid_l = [](Real z) { return 1.0L / (1.0L + std::exp(-z)); };
  Real sum = 0.0L;
  for (const Sample& s : batch.samples) {
    std::vector<Real> h(M, 0.0L), C(M, 0.0L), z(kGateCount * M);
    for (const Vector& x : window_steps(s, N)) {
      for (Gate g : kGates) {
        const GateWeights& gw = p.gate(g);
        for (std::size_t m = 0; m < M; ++m) {
          Real acc = gw.b[m];
          for (std::size_t n = 0; n < N; ++n) acc += static_cast<Real>(x[n]) * gw.W(n, m);
          for (std::size_t k = 0; k < M; ++k) acc += h[k] * gw.U(k, m);
          z[index(g) * M + m] = acc;
        }
      }
      for (std::size_t m = 0; m < M; ++m) {
        const Real i = sigmoid_l(z[index(Gate::input) * M + m]);
        const Real f = sigmoid_l(z[index(Gate::forget) * M + m]);
        const Real c = std::tanh(z[index(Gate::cell) * M + m]);
        const Real o = sigmoid_l(z[index(Gate::output) * M + m]);
        C[m] = f * C[m] + i * c;
        h[m] = o * std::tanh(C[m]);
      }
    }
    Real y = out.b_out;
    for (std::size_t m = 0; m < M; ++m) y += h[m] * out.w_out[m];
    const Real d = y - s.target;
    sum += d * d;
  }
  return sum / static_cast<Real>(batch.size());
}

}  // namespace

GradientCheckReport compare_gradients(const GradientSet& analytic, const LstmParams& params,
                                      const OutputLayer& out, const WindowedSeries& batch,
                                      double step, double tolerance, double floor) {
  if (!(step > 0.0)) throw std::invalid_argument("finite difference step must be positive");
  LstmParams p = params;
  OutputLayer o = out;
  auto groups = param_groups(p, o);
  const auto analytic_groups = param_groups(analytic.lstm, analytic.out);
  if (analytic_groups.size() != groups.size()) throw DimensionError("gradient set layout");

  GradientCheckReport report;
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    auto values = groups[gi].values;
    const auto grad = analytic_groups[gi].values;
    require_size(grad.size(), values.size(), "gradient " + groups[gi].name);
    GroupCheck check{groups[gi].name, 0.0, 0.0, 0};
    for (std::size_t e = 0; e < values.size(); ++e) {
      const double saved = values[e];
      values[e] = saved + step;
      const double hi = values[e];
      const long double up = extended_batch_loss(p, o, batch);
      values[e] = saved - step;
      const double lo = values[e];
      const long double down = extended_batch_loss(p, o, batch);
      values[e] = saved;

      // Divide by the step actually taken after rounding saved +- step.
      const double numeric = static_cast<double>(
          (up - down) / (static_cast<long double>(hi) - static_cast<long double>(lo)));
      const double a = grad[e];
      const double abs_err = std::abs(a - numeric);
      check.max_absolute_error = std::max(check.max_absolute_error, abs_err);
      if (std::abs(a) > floor && std::abs(numeric) > floor) {
        const double rel = abs_err / std::max(std::abs(a), std::abs(numeric));
        check.max_relative_error = std::max(check.max_relative_error, rel);
        ++check.compared;
        if (!(rel < tolerance)) report.passed = false;
      } else if (!(abs_err <= floor)) {
        report.passed = false;
      }
    }
    report.max_relative_error = std::max(report.max_relative_error, check.max_relative_error);
    report.groups.push_back(std::move(check));
  }
  return report;
}

GradientCheckReport finite_difference_check(const LstmParams& params, const OutputLayer& out,
                                            const WindowedSeries& batch, double step,
                                            double tolerance) {
  const GradientResult analytic = bptt_gradients(params, out, batch);
  return compare_gradients(analytic.grads, params, out, batch, step, tolerance);
}

}  // namespace memlstm
