#include "memlstm/run_config.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "memlstm/data.hpp"

namespace memlstm {

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      {"dataset", "series CSV path"},
      {"hidden", "LSTM hidden units"},
      {"look-back", "values per input window"},
      {"split", "training fraction of the windows"},
      {"epochs", "training epochs"},
      {"learning-rate", "optimizer step size"},
      {"optimizer", "adam or sgd"},
      {"beta1", "adam first-moment decay"},
      {"beta2", "adam second-moment decay"},
      {"epsilon", "adam denominator offset"},
      {"clamp-low", "lower weight bound"},
      {"clamp-high", "upper weight bound"},
      {"seed", "training seed"},
      {"shuffle", "shuffle sample order each epoch"},
      {"spacing", "uniform_conductance or uniform_resistance"},
      {"read-noise", "relative read noise sigma"},
      {"level-variation", "relative programming variation sigma"},
      {"noise-seed", "first seed for crossbar non-idealities"},
      {"quantize-output", "quantize the output layer as well"},
      {"eval-seeds", "number of non-ideality seeds to average"},
      {"out-dir", "output directory"},
      {"format", "table or delimited"},
      {"weight-layout", "per_gate or packed weight file blocks"},
      {"weights", "weight file (default <out-dir>/weights.txt)"},
      {"program", "crossbar program file"},
  };
  return keys;
}

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string canonical_key(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return key;
}

bool known_key(const std::string& key) {
  const auto& keys = config_keys();
  return std::any_of(keys.begin(), keys.end(), [&](const ConfigKey& k) { return k.name == key; });
}

double to_real(const std::string& key, const std::string& v) {
  char* end = nullptr;
  errno = 0;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE || !std::isfinite(d)) {
    throw std::invalid_argument(key + ": `" + v + "` is not a number");
  }
  return d;
}

std::uint64_t to_unsigned(const std::string& key, const std::string& v) {
  char* end = nullptr;
  errno = 0;
  const unsigned long long u = std::strtoull(v.c_str(), &end, 10);
  if (v.empty() || v[0] == '-' || end != v.c_str() + v.size() || errno == ERANGE) {
    throw std::invalid_argument(key + ": `" + v + "` is not a non-negative integer");
  }
  return u;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::invalid_argument(key + ": `" + v + "` is not a boolean");
}

}  // namespace

KeyValues parse_config_text(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected `key = value`", line_no);
    const std::string key = canonical_key(trim(line.substr(0, eq)));
    if (!known_key(key)) throw ParseError("unknown key `" + key + "`", line_no);
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

KeyValues load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

RunConfig make_run_config(const KeyValues& raw) {
  RunConfig c;
  LevelSpacing spacing = LevelSpacing::uniform_conductance;
  for (const auto& [raw_key, v] : raw) {
    const std::string key = canonical_key(raw_key);
    if (key == "dataset") c.dataset = v;
    else if (key == "hidden") c.dims.n_hidden = to_unsigned(key, v);
    else if (key == "look-back") c.look_back = to_unsigned(key, v);
    else if (key == "split") c.split = to_real(key, v);
    else if (key == "epochs") c.train.epochs = to_unsigned(key, v);
    else if (key == "learning-rate") c.train.learning_rate = to_real(key, v);
    else if (key == "optimizer") {
      if (v == "adam") c.train.optimizer = OptimizerKind::adam;
      else if (v == "sgd") c.train.optimizer = OptimizerKind::sgd;
      else throw std::invalid_argument("optimizer: expected adam or sgd, got `" + v + "`");
    }
    else if (key == "beta1") c.train.beta1 = to_real(key, v);
    else if (key == "beta2") c.train.beta2 = to_real(key, v);
    else if (key == "epsilon") c.train.epsilon = to_real(key, v);
    else if (key == "clamp-low") c.train.clamp_low = to_real(key, v);
    else if (key == "clamp-high") c.train.clamp_high = to_real(key, v);
    else if (key == "seed") c.train.seed = to_unsigned(key, v);
    else if (key == "shuffle") c.train.shuffle = to_bool(key, v);
    else if (key == "spacing") spacing = parse_spacing(v);
    else if (key == "read-noise") c.crossbar.read_noise_sigma = to_real(key, v);
    else if (key == "level-variation") c.crossbar.level_variation_sigma = to_real(key, v);
    else if (key == "noise-seed") c.crossbar.seed = to_unsigned(key, v);
    else if (key == "quantize-output") c.crossbar.quantize_output_layer = to_bool(key, v);
    else if (key == "eval-seeds") c.eval_seeds = to_unsigned(key, v);
    else if (key == "out-dir") c.out_dir = v;
    else if (key == "format") {
      if (v == "table") c.format = ReportFormat::table;
      else if (v == "delimited") c.format = ReportFormat::delimited;
      else throw std::invalid_argument("format: expected table or delimited, got `" + v + "`");
    }
    else if (key == "weight-layout") {
      if (v == "per_gate") c.weight_layout = WeightLayout::per_gate;
      else if (v == "packed") c.weight_layout = WeightLayout::packed;
      else throw std::invalid_argument("weight-layout: expected per_gate or packed, got `" + v + "`");
    }
    else if (key == "weights") c.weights = v;
    else if (key == "program") c.program = v;
    else throw std::invalid_argument("unknown config key `" + raw_key + "`");
  }
  c.crossbar.levels = build_level_set(spacing);
  c.validate();
  return c;
}

void RunConfig::validate() const {
  dims.validate();
  train.validate();
  crossbar.validate();
  if (look_back < 1) throw std::invalid_argument("look-back must be at least 1");
  if (!(split > 0.0 && split < 1.0)) throw std::invalid_argument("split must lie in (0, 1)");
  if (eval_seeds < 1) throw std::invalid_argument("eval-seeds must be at least 1");
  if (dataset.empty()) throw std::invalid_argument("dataset path is empty");
  if (out_dir.empty()) throw std::invalid_argument("out-dir is empty");
}

std::string describe(const RunConfig& c) {
  std::string s;
  auto line = [&s](const std::string& k, const std::string& v) { s += k + " = " + v + '\n'; };
  line("dataset", c.dataset.string());
  line("hidden", std::to_string(c.dims.n_hidden));
  line("look-back", std::to_string(c.look_back));
  line("split", fmt::format("{}", c.split));
  line("epochs", std::to_string(c.train.epochs));
  line("learning-rate", fmt::format("{}", c.train.learning_rate));
  line("optimizer", c.train.optimizer == OptimizerKind::adam ? "adam" : "sgd");
  line("beta1", fmt::format("{}", c.train.beta1));
  line("beta2", fmt::format("{}", c.train.beta2));
  line("epsilon", fmt::format("{}", c.train.epsilon));
  line("clamp-low", fmt::format("{}", c.train.clamp_low));
  line("clamp-high", fmt::format("{}", c.train.clamp_high));
  line("seed", std::to_string(c.train.seed));
  line("shuffle", c.train.shuffle ? "true" : "false");
  line("spacing", to_string(c.crossbar.levels.spacing));
  line("read-noise", fmt::format("{}", c.crossbar.read_noise_sigma));
  line("level-variation", fmt::format("{}", c.crossbar.level_variation_sigma));
  line("noise-seed", std::to_string(c.crossbar.seed));
  line("quantize-output", c.crossbar.quantize_output_layer ? "true" : "false");
  line("eval-seeds", std::to_string(c.eval_seeds));
  line("out-dir", c.out_dir.string());
  line("format", c.format == ReportFormat::table ? "table" : "delimited");
  line("weight-layout", c.weight_layout == WeightLayout::per_gate ? "per_gate" : "packed");
  line("weights", c.weights_path().string());
  line("program", c.program ? c.program->string() : "");
  return s;
}

}  // namespace memlstm
