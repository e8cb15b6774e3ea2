#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "memlstm/lstm.hpp"

namespace memlstm {

enum class LevelSpacing { uniform_conductance, uniform_resistance };

std::string to_string(LevelSpacing s);
LevelSpacing parse_spacing(const std::string& s);

/// The programmable conductance states of one GST device. Level 0 is the
/// highest resistance (lowest conductance); level 15 the lowest resistance.
struct LevelSet {
  static constexpr std::size_t kCount = 16;
  static constexpr double kMinResistance = 200e3;   // ohm
  static constexpr double kMaxResistance = 2000e3;  // ohm

  LevelSpacing spacing = LevelSpacing::uniform_conductance;
  std::array<double, kCount> resistances{};   // ohm
  std::array<double, kCount> conductances{};  // siemens

  double g_min() const { return conductances.front(); }
  double g_max() const { return conductances.back(); }
  double g_span() const { return g_max() - g_min(); }

  /// Level position on the [0, 1] weight scale: (G_k - G_min) / (G_max - G_min).
  double weight_of(std::size_t level) const;

  /// Throws std::invalid_argument on a wrong count, endpoints, or ordering.
  void validate() const;
  bool operator==(const LevelSet&) const = default;
};

LevelSet build_level_set(LevelSpacing spacing);

/// Differential pair: the weight is carried by G_plus - G_minus.
struct LevelPair {
  std::uint8_t plus = 0;
  std::uint8_t minus = 0;
  bool operator==(const LevelPair&) const = default;
};

/// Magnitudes are rounded to the nearest level (ties go to the higher
/// conductance); the idle side of the pair stays at level 0. |w| > 1 is
/// clamped to 1.
LevelPair map_weight_to_pair(double w, const LevelSet& levels);
double pair_to_weight(LevelPair pair, const LevelSet& levels);

/// map_weight_to_pair followed by pair_to_weight.
double quantize_weight(double w, const LevelSet& levels);

struct CrossbarConfig {
  LevelSet levels = build_level_set(LevelSpacing::uniform_conductance);
  double read_noise_sigma = 0.0;       // relative, per column read
  double level_variation_sigma = 0.0;  // relative, per device at program time
  std::uint64_t seed = 0;
  bool quantize_output_layer = false;

  void validate() const;
};

struct ClampedWeight {
  std::string name;  // e.g. "U_f"
  std::size_t row;
  std::size_t col;
  double value;
};

/// Weights laid out on the array: rows are x inputs, then h inputs, then the
/// constant-1 bias row; logical columns are gate-major (all i units, then f,
/// c, o), each realized as a plus/minus pair of physical columns.
class CrossbarProgram {
 public:
  CrossbarProgram() = default;
  CrossbarProgram(Dims dims, LevelSet levels);

  const Dims& dims() const { return dims_; }
  const LevelSet& levels() const { return levels_; }

  std::size_t rows() const { return dims_.n_inputs + dims_.n_hidden + 1; }
  std::size_t logical_columns() const { return kGateCount * dims_.n_hidden; }
  std::size_t physical_columns() const { return 2 * logical_columns(); }
  std::size_t bias_row() const { return dims_.n_inputs + dims_.n_hidden; }
  std::size_t column(Gate g, std::size_t unit) const { return index(g) * dims_.n_hidden + unit; }

  LevelPair& cell(std::size_t row, std::size_t col) { return cells_[row * logical_columns() + col]; }
  LevelPair cell(std::size_t row, std::size_t col) const {
    return cells_[row * logical_columns() + col];
  }

  /// Physical column p = 2 * logical + (0 for plus, 1 for minus).
  std::uint8_t level(std::size_t row, std::size_t physical) const;
  void set_level(std::size_t row, std::size_t physical, std::uint8_t level);

  /// Device conductance, including programming variation when present.
  double conductance(std::size_t row, std::size_t physical) const;

  bool has_variation() const { return !programmed_.empty(); }
  void set_programmed(std::vector<double> siemens);  // rows x physical_columns, row-major
  const std::vector<double>& programmed() const { return programmed_; }

  /// Label of a physical column such as "f3-".
  std::string physical_label(std::size_t physical) const;

  std::vector<ClampedWeight> clamped;  // filled by program_crossbar; not serialized

  bool operator==(const CrossbarProgram& o) const {
    return dims_ == o.dims_ && levels_ == o.levels_ && cells_ == o.cells_ &&
           programmed_ == o.programmed_;
  }

 private:
  Dims dims_;
  LevelSet levels_;
  std::vector<LevelPair> cells_;
  std::vector<double> programmed_;
};

CrossbarProgram program_crossbar(const LstmParams& params, const CrossbarConfig& cfg);

/// Ideal quantized weights the program encodes; programming variation is ignored.
LstmParams reconstruct_weights(const CrossbarProgram& program);

/// Output layer passed through the same quantizer as the crossbar weights.
OutputLayer quantize_output_layer(const OutputLayer& out, const LevelSet& levels);

/// Weighted sum of one logical column in weight units:
///   sum_r V_r (G_plus - G_minus) / (G_max - G_min),
/// times (1 + sigma * z) when read noise is on. `inputs` spans all rows,
/// with the bias row carrying 1.
double crossbar_dot(const CrossbarProgram& program, std::span<const double> inputs, Gate gate,
                    std::size_t unit, double read_noise_sigma, std::mt19937_64& rng);

struct CycleRead {
  std::size_t cycle;  // hidden unit served in this cycle
  Gate gate;
  double column_sum;
  double activation;
};

struct CrossbarStepResult {
  GateActivations gates;
  LstmState state;
  std::vector<CycleRead> trace;
};

/// One time step as the hardware schedules it: cycle m reads the i, f, c, o
/// columns of unit m, applies the activation stages, and stores C_m and h_m in
/// the memory unit. Every cycle sees the previous step's h on the h rows.
CrossbarStepResult crossbar_lstm_step(const CrossbarProgram& program,
                                      std::span<const double> x_t, const LstmState& prev,
                                      const CrossbarConfig& cfg, std::mt19937_64& rng);

struct CrossbarSequenceResult {
  Vector predictions;
  LstmState final_state;
  std::size_t column_reads = 0;
};

/// Output layer is evaluated as an ideal affine map; set
/// cfg.quantize_output_layer to pass its weights through the level set first.
CrossbarSequenceResult crossbar_forward(const CrossbarProgram& program, const OutputLayer& out,
                                        std::span<const Vector> inputs,
                                        const CrossbarConfig& cfg, std::mt19937_64& rng,
                                        const LstmState* initial = nullptr);

double crossbar_predict_window(const CrossbarProgram& program, const OutputLayer& out,
                               std::span<const double> window, const CrossbarConfig& cfg,
                               std::mt19937_64& rng);

/// Plain-text program map. Output is deterministic and re-reads bit-exactly.
void write_program(std::ostream& os, const CrossbarProgram& program);
CrossbarProgram read_program(std::istream& is);

}  // namespace memlstm
