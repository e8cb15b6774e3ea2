#pragma once

#include <filesystem>
#include <iosfwd>

#include "memlstm/lstm.hpp"

namespace memlstm {

enum class WeightLayout { per_gate, packed };

struct Model {
  LstmParams params;
  OutputLayer out;
  bool operator==(const Model&) const = default;
};

/// Weight exchange text format:
///
///   gate_order i f c o
///   W_i 1 4
///   <row of 4 numbers>
///   ...
///
/// One block per matrix in the order W_i..W_o, U_i..U_o, b_i..b_o, w_out,
/// b_out, every number printed with 17 significant digits.
///
/// On import, `gate_order` may name any permutation of i f c o, and the packed
/// blocks `W` [N, 4M], `U` [M, 4M] and `b` [1, 4M] are accepted in place of the
/// per-gate blocks; packed columns follow the declared gate order. Export
/// writes either form; packed is the [1,4M] / [M,4M] / [1,4M] view.
void write_weights(std::ostream& os, const Model& model,
                   WeightLayout layout = WeightLayout::per_gate);
Model read_weights(std::istream& is);

Model load_weights(const std::filesystem::path& path);
void save_weights(const std::filesystem::path& path, const Model& model,
                  WeightLayout layout = WeightLayout::per_gate);

}  // namespace memlstm
