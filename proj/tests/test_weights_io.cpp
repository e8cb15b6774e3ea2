#include <doctest.h>

#include <random>
#include <sstream>

#include "memlstm/data.hpp"
#include "memlstm/run_config.hpp"
#include "memlstm/weights_io.hpp"
#include "test_support.hpp"

using namespace memlstm;
using memlstm::testing::random_model;

namespace {

std::string to_text(const Model& m, WeightLayout layout = WeightLayout::per_gate) {
  std::ostringstream os;
  write_weights(os, m, layout);
  return os.str();
}

Model from_text(const std::string& s) {
  std::istringstream in(s);
  return read_weights(in);
}

std::vector<std::string> block_headers(const std::string& text) {
  std::vector<std::string> headers;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && std::isalpha(static_cast<unsigned char>(line[0])) &&
        line.rfind("gate_order", 0) != 0) {
      headers.push_back(line);
    }
  }
  return headers;
}

}  // namespace

TEST_CASE("weight files round trip byte for byte") {
  std::mt19937_64 rng(51);
  for (int trial = 0; trial < 50; ++trial) {
    const Model m = random_model({1 + rng() % 3, 1 + rng() % 6}, rng, 3.0);
    for (auto layout : {WeightLayout::per_gate, WeightLayout::packed}) {
      const std::string first = to_text(m, layout);
      const Model back = from_text(first);
      CHECK(back == m);
      CHECK(to_text(back, layout) == first);
    }
  }
}

TEST_CASE("layout of the exported blocks") {
  std::mt19937_64 rng(52);
  const Model m = random_model({1, 4}, rng);
  const std::string per_gate = to_text(m);
  CHECK(per_gate.rfind("gate_order i f c o\n", 0) == 0);
  CHECK(block_headers(per_gate) ==
        std::vector<std::string>{"W_i 1 4", "W_f 1 4", "W_c 1 4", "W_o 1 4", "U_i 4 4",
                                 "U_f 4 4", "U_c 4 4", "U_o 4 4", "b_i 1 4", "b_f 1 4",
                                 "b_c 1 4", "b_o 1 4", "w_out 4 1", "b_out 1 1"});
  CHECK(block_headers(to_text(m, WeightLayout::packed)) ==
        std::vector<std::string>{"W 1 16", "U 4 16", "b 1 16", "w_out 4 1", "b_out 1 1"});

  // 17 significant digits per number.
  std::istringstream in(per_gate);
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  std::getline(in, line);
  std::istringstream row(line);
  std::string number;
  row >> number;
  const auto mantissa = number.substr(0, number.find('e'));
  std::size_t digits = 0;
  for (char c : mantissa) digits += std::isdigit(static_cast<unsigned char>(c)) != 0;
  CHECK(digits == 17);
}

TEST_CASE("packed import honors the declared gate order") {
  // Columns for a 1-input, 1-unit model listed as (o, c, f, i).
  const std::string text =
      "gate_order o c f i\n"
      "W 1 4\n0.4 0.3 0.2 0.1\n"
      "U 1 4\n-0.4 -0.3 -0.2 -0.1\n"
      "b 1 4\n4 3 2 1\n"
      "w_out 1 1\n0.5\n"
      "b_out 1 1\n-0.25\n";
  const Model m = from_text(text);
  CHECK(m.params.dims == Dims{1, 1});
  CHECK(m.params.gate(Gate::input).W(0, 0) == 0.1);
  CHECK(m.params.gate(Gate::forget).W(0, 0) == 0.2);
  CHECK(m.params.gate(Gate::cell).U(0, 0) == -0.3);
  CHECK(m.params.gate(Gate::output).b[0] == 4.0);
  CHECK(m.out.w_out == Vector{0.5});
  CHECK(m.out.b_out == -0.25);
  // Re-export is in canonical order.
  CHECK(block_headers(to_text(m))[0] == "W_i 1 1");
}

TEST_CASE("malformed weight files") {
  std::mt19937_64 rng(53);
  const std::string good = to_text(random_model({1, 2}, rng));
  CHECK_NOTHROW(from_text(good));
  CHECK_THROWS_AS(from_text(""), ParseError);
  CHECK_THROWS_AS(from_text("gate_order i f c\n"), ParseError);
  CHECK_THROWS_AS(from_text("gate_order i i c o\n"), ParseError);

  std::string missing = good.substr(0, good.find("b_out"));
  CHECK_THROWS_WITH_AS(from_text(missing), doctest::Contains("b_out"), ParseError);

  std::string bad_number = good;
  bad_number.replace(bad_number.find('\n', bad_number.find("W_f")) + 1, 3, "x.y");
  CHECK_THROWS_AS(from_text(bad_number), ParseError);

  std::string bad_shape = good;
  bad_shape.replace(bad_shape.find("U_c 2 2"), 7, "U_c 1 2");
  CHECK_THROWS_AS(from_text(bad_shape), ParseError);

  CHECK_THROWS_AS(from_text(good + "extra 1 1\n0\n"), ParseError);
  CHECK_THROWS_AS(load_weights("/nonexistent/weights.txt"), std::runtime_error);
}

TEST_CASE("config files and overrides") {
  const KeyValues kv = parse_config_text(
      "# comment\n"
      "epochs = 12\n"
      "learning_rate = 0.05   # underscores are accepted\n"
      "\n"
      "spacing = uniform_resistance\n"
      "read-noise = 0.02\n"
      "quantize-output = true\n");
  CHECK(kv.at("learning-rate") == "0.05");
  const RunConfig c = make_run_config(kv);
  CHECK(c.train.epochs == 12);
  CHECK(c.train.learning_rate == 0.05);
  CHECK(c.crossbar.levels.spacing == LevelSpacing::uniform_resistance);
  CHECK(c.crossbar.read_noise_sigma == 0.02);
  CHECK(c.crossbar.quantize_output_layer);
  CHECK(c.weights_path() == std::filesystem::path("run") / "weights.txt");

  const RunConfig d = make_run_config({});
  CHECK(d.train.epochs == 100);
  CHECK(d.split == 0.67);
  CHECK(d.look_back == 1);
  CHECK(d.dims == Dims{1, 4});
  CHECK(d.train.optimizer == OptimizerKind::adam);
  CHECK(d.crossbar.levels.spacing == LevelSpacing::uniform_conductance);

  CHECK_THROWS_AS(parse_config_text("epochs 12\n"), ParseError);
  CHECK_THROWS_AS(parse_config_text("colour = blue\n"), ParseError);
  CHECK_THROWS_AS(make_run_config({{"epochs", "-3"}}), std::invalid_argument);
  CHECK_THROWS_AS(make_run_config({{"epochs", "0"}}), std::invalid_argument);
  CHECK_THROWS_AS(make_run_config({{"split", "1.5"}}), std::invalid_argument);
  CHECK_THROWS_AS(make_run_config({{"read-noise", "-0.1"}}), std::invalid_argument);
  CHECK_THROWS_AS(make_run_config({{"spacing", "log"}}), std::invalid_argument);
  CHECK_THROWS_AS(make_run_config({{"shuffle", "maybe"}}), std::invalid_argument);

  // describe() emits every key, and feeding it back reproduces the config.
  const std::string text = describe(c);
  for (const auto& key : config_keys()) CHECK(text.find(key.name + " = ") != std::string::npos);
  KeyValues again = parse_config_text(text);
  again.erase("program");
  CHECK(describe(make_run_config(again)) == text);
}
