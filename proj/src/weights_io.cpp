#include "memlstm/weights_io.hpp"

#include <array>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>

#include <fmt/format.h>

#include "line_reader.hpp"

namespace memlstm {

namespace {

void write_block(std::ostream& os, const std::string& name, std::size_t rows, std::size_t cols,
                 std::span<const double> values) {
  os << name << ' ' << rows << ' ' << cols << '\n';
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      os << (c ? " " : "") << fmt::format("{:.16e}", values[r * cols + c]);
    }
    os << '\n';
  }
}

/// Gates side by side: column k * M + m holds gate k, unit m.
std::vector<double> pack(const LstmParams& p, std::size_t rows,
                         const std::function<double(const GateWeights&, std::size_t, std::size_t)>& at) {
  const std::size_t M = p.dims.n_hidden;
  std::vector<double> out(rows * kGateCount * M);
  for (std::size_t r = 0; r < rows; ++r) {
    for (Gate g : kGates) {
      for (std::size_t m = 0; m < M; ++m) out[r * kGateCount * M + index(g) * M + m] = at(p.gate(g), r, m);
    }
  }
  return out;
}

}  // namespace

void write_weights(std::ostream& os, const Model& model, WeightLayout layout) {
  model.params.check_shapes();
  require_size(model.out.w_out.size(), model.params.dims.n_hidden, "w_out");
  os << "gate_order i f c o\n";
  if (layout == WeightLayout::per_gate) {
    for (const auto& g : param_groups(model.params, model.out)) {
      write_block(os, g.name, g.rows, g.cols, g.values);
    }
    return;
  }
  const LstmParams& p = model.params;
  const std::size_t N = p.dims.n_inputs;
  const std::size_t M = p.dims.n_hidden;
  write_block(os, "W", N, kGateCount * M,
              pack(p, N, [](const GateWeights& g, std::size_t r, std::size_t m) { return g.W(r, m); }));
  write_block(os, "U", M, kGateCount * M,
              pack(p, M, [](const GateWeights& g, std::size_t r, std::size_t m) { return g.U(r, m); }));
  write_block(os, "b", 1, kGateCount * M,
              pack(p, 1, [](const GateWeights& g, std::size_t, std::size_t m) { return g.b[m]; }));
  write_block(os, "w_out", M, 1, model.out.w_out);
  write_block(os, "b_out", 1, 1, {&model.out.b_out, 1});
}

namespace {

struct Block {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;
  std::size_t line = 0;
};

Gate gate_from_suffix(char c, detail::LineReader& in) {
  for (Gate g : kGates) {
    if (gate_suffix(g) == c) return g;
  }
  in.fail(std::string("unknown gate `") + c + "`");
}

}  // namespace

Model read_weights(std::istream& is) {
  detail::LineReader in(is);

  // File gate order position -> gate.
  std::array<Gate, kGateCount> order = kGates;
  std::map<std::string, Block> blocks;

  auto t = in.next();
  if (!t.empty() && t[0] == "gate_order") {
    if (t.size() != 1 + kGateCount) in.fail("gate_order lists four gates");
    std::array<bool, kGateCount> seen{};
    for (std::size_t k = 0; k < kGateCount; ++k) {
      if (t[k + 1].size() != 1) in.fail("gate names are single letters");
      order[k] = gate_from_suffix(t[k + 1][0], in);
      if (seen[index(order[k])]) in.fail("gate_order repeats a gate");
      seen[index(order[k])] = true;
    }
    t = in.next();
  }

  for (; !t.empty(); t = in.next()) {
    if (t.size() != 3) in.fail("expected `name rows cols`");
    const std::string name = t[0];
    if (blocks.count(name)) in.fail("duplicate block " + name);
    Block b{in.to_count(t[1]), in.to_count(t[2]), {}, in.line()};
    for (std::size_t r = 0; r < b.rows; ++r) {
      const auto row = in.next();
      if (row.size() != b.cols) {
        in.fail(fmt::format("{}: expected {} values in row {}", name, b.cols, r));
      }
      for (const auto& s : row) b.values.push_back(in.to_double(s));
    }
    blocks.emplace(name, std::move(b));
  }
  if (blocks.empty()) throw ParseError("weight file has no matrices", 0);

  auto take = [&](const std::string& name) -> std::optional<Block> {
    auto it = blocks.find(name);
    if (it == blocks.end()) return std::nullopt;
    Block b = std::move(it->second);
    blocks.erase(it);
    return b;
  };
  auto require = [&](const std::string& name) {
    auto b = take(name);
    if (!b) throw ParseError("missing block " + name, 0);
    return *b;
  };
  auto check = [](const std::string& name, const Block& b, std::size_t rows, std::size_t cols) {
    if (b.rows != rows || b.cols != cols) {
      throw ParseError(fmt::format("{} has shape [{},{}], expected [{},{}]", name, b.rows,
                                   b.cols, rows, cols),
                       b.line);
    }
  };

  Model model;
  const bool packed = blocks.count("W") > 0;
  Dims dims;
  if (packed) {
    const Block W = require("W");
    if (W.cols % kGateCount != 0 || W.cols == 0) {
      throw ParseError("packed W must have 4M columns", W.line);
    }
    dims = {W.rows, W.cols / kGateCount};
    dims.validate();
    const Block U = require("U");
    const Block b = require("b");
    check("U", U, dims.n_hidden, W.cols);
    check("b", b, 1, W.cols);
    model.params = LstmParams(dims);
    const std::size_t M = dims.n_hidden;
    for (std::size_t k = 0; k < kGateCount; ++k) {
      GateWeights& gw = model.params.gate(order[k]);
      for (std::size_t m = 0; m < M; ++m) {
        for (std::size_t n = 0; n < dims.n_inputs; ++n) gw.W(n, m) = W.values[n * W.cols + k * M + m];
        for (std::size_t j = 0; j < M; ++j) gw.U(j, m) = U.values[j * U.cols + k * M + m];
        gw.b[m] = b.values[k * M + m];
      }
    }
  } else {
    const std::string first = std::string("W_") + gate_suffix(order[0]);
    auto it = blocks.find(first);
    if (it == blocks.end()) throw ParseError("missing block " + first, 0);
    dims = {it->second.rows, it->second.cols};
    dims.validate();
    model.params = LstmParams(dims);
    for (Gate g : kGates) {
      const std::string s(1, gate_suffix(g));
      const Block W = require("W_" + s);
      const Block U = require("U_" + s);
      const Block b = require("b_" + s);
      check("W_" + s, W, dims.n_inputs, dims.n_hidden);
      check("U_" + s, U, dims.n_hidden, dims.n_hidden);
      check("b_" + s, b, 1, dims.n_hidden);
      GateWeights& gw = model.params.gate(g);
      std::copy(W.values.begin(), W.values.end(), gw.W.values().begin());
      std::copy(U.values.begin(), U.values.end(), gw.U.values().begin());
      gw.b = b.values;
    }
  }

  const Block w_out = require("w_out");
  const Block b_out = require("b_out");
  check("w_out", w_out, dims.n_hidden, 1);
  check("b_out", b_out, 1, 1);
  model.out = {w_out.values, b_out.values[0]};

  if (!blocks.empty()) {
    throw ParseError("unexpected block " + blocks.begin()->first, blocks.begin()->second.line);
  }
  return model;
}

Model load_weights(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open weight file " + path.string());
  return read_weights(in);
}

void save_weights(const std::filesystem::path& path, const Model& model, WeightLayout layout) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write weight file " + path.string());
  write_weights(out, model, layout);
}

}  // namespace memlstm
