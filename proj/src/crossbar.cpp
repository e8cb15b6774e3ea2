#include "memlstm/crossbar.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include <fmt/format.h>

#include "line_reader.hpp"

namespace memlstm {

std::string to_string(LevelSpacing s) {
  return s == LevelSpacing::uniform_conductance ? "uniform_conductance" : "uniform_resistance";
}

LevelSpacing parse_spacing(const std::string& s) {
  if (s == "uniform_conductance") return LevelSpacing::uniform_conductance;
  if (s == "uniform_resistance") return LevelSpacing::uniform_resistance;
  throw std::invalid_argument("unknown level spacing `" + s + "`");
}

LevelSet build_level_set(LevelSpacing spacing) {
  constexpr std::size_t last = LevelSet::kCount - 1;
  LevelSet set;
  set.spacing = spacing;
  if (spacing == LevelSpacing::uniform_conductance) {
    const double g_lo = 1.0 / LevelSet::kMaxResistance;
    const double g_hi = 1.0 / LevelSet::kMinResistance;
    for (std::size_t k = 0; k < LevelSet::kCount; ++k) {
      set.conductances[k] = g_lo + (g_hi - g_lo) * static_cast<double>(k) / last;
    }
    set.conductances[last] = g_hi;
    for (std::size_t k = 0; k < LevelSet::kCount; ++k) {
      set.resistances[k] = 1.0 / set.conductances[k];
    }
  } else {
    const double step = (LevelSet::kMaxResistance - LevelSet::kMinResistance) / last;
    for (std::size_t k = 0; k < LevelSet::kCount; ++k) {
      set.resistances[k] = LevelSet::kMaxResistance - step * static_cast<double>(k);
      set.conductances[k] = 1.0 / set.resistances[k];
    }
  }
  return set;
}

double LevelSet::weight_of(std::size_t level) const {
  return (conductances.at(level) - g_min()) / g_span();
}

void LevelSet::validate() const {
  for (std::size_t k = 0; k < kCount; ++k) {
    if (!(resistances[k] > 0.0) || !(conductances[k] > 0.0)) {
      throw std::invalid_argument("level set: non-positive level");
    }
    if (std::abs(conductances[k] * resistances[k] - 1.0) > 1e-12) {
      throw std::invalid_argument("level set: conductance is not 1/resistance at level " +
                                  std::to_string(k));
    }
    if (k > 0 && !(conductances[k] > conductances[k - 1])) {
      throw std::invalid_argument("level set: levels not strictly increasing in conductance");
    }
  }
  if (std::abs(resistances.front() / kMaxResistance - 1.0) > 1e-12 ||
      std::abs(resistances.back() / kMinResistance - 1.0) > 1e-12) {
    throw std::invalid_argument("level set: endpoints must be 2000 kOhm and 200 kOhm");
  }
}

namespace {

std::uint8_t nearest_level(double magnitude, const LevelSet& levels) {
  // Distances are compared on the weight scale, which is the conductance
  // scale shifted and divided by a constant.
  constexpr double kTie = 1e-12;
  std::size_t best = 0;
  double best_dist = std::abs(levels.weight_of(0) - magnitude);
  for (std::size_t k = 1; k < LevelSet::kCount; ++k) {
    const double d = std::abs(levels.weight_of(k) - magnitude);
    if (d <= best_dist + kTie) {
      best = k;
      best_dist = std::min(d, best_dist);
    }
  }
  return static_cast<std::uint8_t>(best);
}

}  // namespace

LevelPair map_weight_to_pair(double w, const LevelSet& levels) {
  const double magnitude = std::min(std::abs(w), 1.0);
  const std::uint8_t k = nearest_level(magnitude, levels);
  return w < 0.0 ? LevelPair{0, k} : LevelPair{k, 0};
}

double pair_to_weight(LevelPair pair, const LevelSet& levels) {
  return levels.weight_of(pair.plus) - levels.weight_of(pair.minus);
}

double quantize_weight(double w, const LevelSet& levels) {
  return pair_to_weight(map_weight_to_pair(w, levels), levels);
}

void CrossbarConfig::validate() const {
  levels.validate();
  if (!(read_noise_sigma >= 0.0)) throw std::invalid_argument("read noise sigma must be >= 0");
  if (!(level_variation_sigma >= 0.0)) {
    throw std::invalid_argument("level variation sigma must be >= 0");
  }
}

CrossbarProgram::CrossbarProgram(Dims dims, LevelSet levels)
    : dims_(dims), levels_(levels), cells_(rows() * logical_columns()) {
  dims_.validate();
}

std::uint8_t CrossbarProgram::level(std::size_t row, std::size_t physical) const {
  const LevelPair p = cell(row, physical / 2);
  return physical % 2 == 0 ? p.plus : p.minus;
}

void CrossbarProgram::set_level(std::size_t row, std::size_t physical, std::uint8_t level) {
  if (level >= LevelSet::kCount) throw std::out_of_range("level index out of range");
  LevelPair& p = cell(row, physical / 2);
  (physical % 2 == 0 ? p.plus : p.minus) = level;
}

double CrossbarProgram::conductance(std::size_t row, std::size_t physical) const {
  if (!programmed_.empty()) return programmed_[row * physical_columns() + physical];
  return levels_.conductances[level(row, physical)];
}

void CrossbarProgram::set_programmed(std::vector<double> siemens) {
  if (!siemens.empty()) require_size(siemens.size(), rows() * physical_columns(), "programmed");
  programmed_ = std::move(siemens);
}

std::string CrossbarProgram::physical_label(std::size_t physical) const {
  const std::size_t logical = physical / 2;
  const Gate g = kGates[logical / dims_.n_hidden];
  return fmt::format("{}{}{}", gate_suffix(g), logical % dims_.n_hidden,
                     physical % 2 == 0 ? '+' : '-');
}

namespace {

/// Weight stored at (row, gate, unit) of the array layout.
template <typename Params>
decltype(auto) weight_at(Params& params, std::size_t row, Gate g, std::size_t unit) {
  const std::size_t N = params.dims.n_inputs;
  const std::size_t M = params.dims.n_hidden;
  auto& gw = params.gate(g);
  if (row < N) return gw.W(row, unit);
  if (row < N + M) return gw.U(row - N, unit);
  return gw.b[unit];
}

std::string weight_name(const Dims& dims, std::size_t row, Gate g) {
  const char* prefix = row < dims.n_inputs ? "W_" : row < dims.n_inputs + dims.n_hidden ? "U_" : "b_";
  return std::string(prefix) + gate_suffix(g);
}

}  // namespace

CrossbarProgram program_crossbar(const LstmParams& params, const CrossbarConfig& cfg) {
  params.check_shapes();
  cfg.validate();
  CrossbarProgram prog(params.dims, cfg.levels);
  const std::size_t M = params.dims.n_hidden;
  for (std::size_t row = 0; row < prog.rows(); ++row) {
    for (Gate g : kGates) {
      for (std::size_t m = 0; m < M; ++m) {
        const double w = weight_at(params, row, g, m);
        if (std::abs(w) > 1.0 || std::isnan(w)) {
          const std::size_t r = row < params.dims.n_inputs ? row
                                : row < prog.bias_row() ? row - params.dims.n_inputs
                                                        : 0;
          prog.clamped.push_back({weight_name(params.dims, row, g), r, m, w});
        }
        prog.cell(row, prog.column(g, m)) = map_weight_to_pair(std::isnan(w) ? 0.0 : w, cfg.levels);
      }
    }
  }

  if (cfg.level_variation_sigma > 0.0) {
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<double> siemens(prog.rows() * prog.physical_columns());
    for (std::size_t row = 0; row < prog.rows(); ++row) {
      for (std::size_t p = 0; p < prog.physical_columns(); ++p) {
        const double nominal = cfg.levels.conductances[prog.level(row, p)];
        siemens[row * prog.physical_columns() + p] =
            std::max(0.0, nominal * (1.0 + cfg.level_variation_sigma * z(rng)));
      }
    }
    prog.set_programmed(std::move(siemens));
  }
  return prog;
}

LstmParams reconstruct_weights(const CrossbarProgram& program) {
  LstmParams params(program.dims());
  for (std::size_t row = 0; row < program.rows(); ++row) {
    for (Gate g : kGates) {
      for (std::size_t m = 0; m < program.dims().n_hidden; ++m) {
        weight_at(params, row, g, m) =
            pair_to_weight(program.cell(row, program.column(g, m)), program.levels());
      }
    }
  }
  return params;
}

OutputLayer quantize_output_layer(const OutputLayer& out, const LevelSet& levels) {
  OutputLayer q = out;
  for (double& w : q.w_out) w = quantize_weight(w, levels);
  q.b_out = quantize_weight(q.b_out, levels);
  return q;
}

double crossbar_dot(const CrossbarProgram& program, std::span<const double> inputs, Gate gate,
                    std::size_t unit, double read_noise_sigma, std::mt19937_64& rng) {
  require_size(inputs.size(), program.rows(), "crossbar inputs");
  if (unit >= program.dims().n_hidden) {
    throw std::out_of_range("crossbar_dot: unit " + std::to_string(unit) + " out of range");
  }
  if (index(gate) >= kGateCount) throw std::out_of_range("crossbar_dot: bad gate");
  const std::size_t plus = 2 * program.column(gate, unit);
  double current = 0.0;
  for (std::size_t r = 0; r < program.rows(); ++r) {
    current += inputs[r] * (program.conductance(r, plus) - program.conductance(r, plus + 1));
  }
  double value = current / program.levels().g_span();
  if (read_noise_sigma > 0.0) {
    std::normal_distribution<double> z(0.0, 1.0);
    value *= 1.0 + read_noise_sigma * z(rng);
  }
  return value;
}

CrossbarStepResult crossbar_lstm_step(const CrossbarProgram& program,
                                      std::span<const double> x_t, const LstmState& prev,
                                      const CrossbarConfig& cfg, std::mt19937_64& rng) {
  const std::size_t N = program.dims().n_inputs;
  const std::size_t M = program.dims().n_hidden;
  require_size(x_t.size(), N, "x_t");
  require_size(prev.h.size(), M, "prev.h");
  require_size(prev.C.size(), M, "prev.C");

  // Row voltages are latched for the whole step.
  Vector rows(program.rows());
  std::copy(x_t.begin(), x_t.end(), rows.begin());
  std::copy(prev.h.begin(), prev.h.end(), rows.begin() + static_cast<std::ptrdiff_t>(N));
  rows[program.bias_row()] = 1.0;

  CrossbarStepResult r;
  for (Gate g : kGates) r.gates.of(g).assign(M, 0.0);
  r.state = LstmState::zeros(M);  // memory units
  r.trace.reserve(kGateCount * M);

  for (std::size_t m = 0; m < M; ++m) {
    for (Gate g : kGates) {
      const double sum = crossbar_dot(program, rows, g, m, cfg.read_noise_sigma, rng);
      const double act = g == Gate::cell ? tanh_act(sum) : sigmoid(sum);
      r.gates.of(g)[m] = act;
      r.trace.push_back({m, g, sum, act});
    }
    r.state.C[m] = r.gates.f[m] * prev.C[m] + r.gates.i[m] * r.gates.c_tilde[m];
    r.state.h[m] = r.gates.o[m] * tanh_act(r.state.C[m]);
  }
  return r;
}

CrossbarSequenceResult crossbar_forward(const CrossbarProgram& program, const OutputLayer& out,
                                        std::span<const Vector> inputs,
                                        const CrossbarConfig& cfg, std::mt19937_64& rng,
                                        const LstmState* initial) {
  const std::size_t M = program.dims().n_hidden;
  const OutputLayer readout =
      cfg.quantize_output_layer ? quantize_output_layer(out, program.levels()) : out;
  require_size(readout.w_out.size(), M, "w_out");

  CrossbarSequenceResult r{{}, initial ? *initial : LstmState::zeros(M), 0};
  r.predictions.reserve(inputs.size());
  for (const Vector& x : inputs) {
    CrossbarStepResult step = crossbar_lstm_step(program, x, r.final_state, cfg, rng);
    r.column_reads += step.trace.size();
    r.final_state = std::move(step.state);
    r.predictions.push_back(dense_output(r.final_state.h, readout));
  }
  return r;
}

double crossbar_predict_window(const CrossbarProgram& program, const OutputLayer& out,
                               std::span<const double> window, const CrossbarConfig& cfg,
                               std::mt19937_64& rng) {
  const std::size_t N = program.dims().n_inputs;
  if (window.empty() || window.size() % N != 0) {
    throw DimensionError("window: length must be a positive multiple of n_inputs");
  }
  std::vector<Vector> steps;
  for (std::size_t t = 0; t < window.size(); t += N) {
    steps.emplace_back(window.begin() + static_cast<std::ptrdiff_t>(t),
                       window.begin() + static_cast<std::ptrdiff_t>(t + N));
  }
  return crossbar_forward(program, out, steps, cfg, rng).predictions.back();
}

// Program file layout:
//   memlstm-crossbar-program 1
//   inputs N / hidden M / rows R / columns P / spacing S / levels 16
//   level k <resistance> <conductance>      (16 lines)
//   column <label> <level per row>          (one line per physical column)
//   programmed                              (only with programming variation)
//   column <label> <siemens per row>
void write_program(std::ostream& os, const CrossbarProgram& program) {
  const LevelSet& lv = program.levels();
  os << "memlstm-crossbar-program 1\n";
  os << "inputs " << program.dims().n_inputs << '\n';
  os << "hidden " << program.dims().n_hidden << '\n';
  os << "rows " << program.rows() << '\n';
  os << "columns " << program.physical_columns() << '\n';
  os << "spacing " << to_string(lv.spacing) << '\n';
  os << "levels " << LevelSet::kCount << '\n';
  for (std::size_t k = 0; k < LevelSet::kCount; ++k) {
    os << fmt::format("level {} {:.17g} {:.17g}\n", k, lv.resistances[k], lv.conductances[k]);
  }
  for (std::size_t p = 0; p < program.physical_columns(); ++p) {
    os << "column " << program.physical_label(p);
    for (std::size_t r = 0; r < program.rows(); ++r) os << ' ' << int(program.level(r, p));
    os << '\n';
  }
  if (program.has_variation()) {
    os << "programmed\n";
    for (std::size_t p = 0; p < program.physical_columns(); ++p) {
      os << "column " << program.physical_label(p);
      for (std::size_t r = 0; r < program.rows(); ++r) {
        os << fmt::format(" {:.17g}", program.conductance(r, p));
      }
      os << '\n';
    }
  }
}

CrossbarProgram read_program(std::istream& is) {
  detail::LineReader in(is);
  const auto magic = in.expect("memlstm-crossbar-program", 1);
  if (magic[1] != "1") in.fail("unsupported program version " + magic[1]);

  Dims dims;
  dims.n_inputs = in.count("inputs");
  dims.n_hidden = in.count("hidden");
  if (dims.n_inputs == 0 || dims.n_hidden == 0) in.fail("dimensions must be positive");
  const std::size_t rows = in.count("rows");
  const std::size_t columns = in.count("columns");
  if (rows != dims.n_inputs + dims.n_hidden + 1) in.fail("row count disagrees with dimensions");
  if (columns != 2 * kGateCount * dims.n_hidden) {
    in.fail("column count disagrees with dimensions");
  }

  LevelSet lv;
  try {
    lv.spacing = parse_spacing(in.expect("spacing", 1)[1]);
  } catch (const std::invalid_argument& e) {
    in.fail(e.what());
  }
  if (in.count("levels") != LevelSet::kCount) in.fail("level table must have 16 entries");
  for (std::size_t k = 0; k < LevelSet::kCount; ++k) {
    const auto t = in.expect("level", 3);
    if (in.to_count(t[1]) != k) in.fail("level entries out of order");
    lv.resistances[k] = in.to_double(t[2]);
    lv.conductances[k] = in.to_double(t[3]);
  }
  try {
    lv.validate();
  } catch (const std::invalid_argument& e) {
    in.fail(e.what());
  }

  CrossbarProgram prog(dims, lv);
  auto read_columns = [&](auto&& store) {
    for (std::size_t p = 0; p < columns; ++p) {
      const auto t = in.expect("column", rows + 1);
      if (t[1] != prog.physical_label(p)) {
        in.fail("expected column " + prog.physical_label(p) + ", found " + t[1]);
      }
      for (std::size_t r = 0; r < rows; ++r) store(r, p, t[r + 2]);
    }
  };
  read_columns([&](std::size_t r, std::size_t p, const std::string& s) {
    const std::size_t level = in.to_count(s);
    if (level >= LevelSet::kCount) in.fail("level index " + s + " out of range");
    prog.set_level(r, p, static_cast<std::uint8_t>(level));
  });

  auto t = in.next();
  if (!t.empty()) {
    if (t.size() != 1 || t[0] != "programmed") in.fail("unexpected `" + t[0] + "`");
    std::vector<double> siemens(rows * columns);
    read_columns([&](std::size_t r, std::size_t p, const std::string& s) {
      const double g = in.to_double(s);
      if (g < 0.0) in.fail("negative conductance");
      siemens[r * columns + p] = g;
    });
    prog.set_programmed(std::move(siemens));
    if (!in.next().empty()) in.fail("trailing content after programmed section");
  }
  return prog;
}

}  // namespace memlstm
