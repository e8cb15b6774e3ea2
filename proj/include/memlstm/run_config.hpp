#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "memlstm/crossbar.hpp"
#include "memlstm/training.hpp"
#include "memlstm/weights_io.hpp"

namespace memlstm {

enum class ReportFormat { table, delimited };

struct RunConfig {
  std::filesystem::path dataset = "data/airline-passengers.csv";
  Dims dims{1, 4};
  std::size_t look_back = 1;
  double split = 0.67;
  TrainConfig train;
  CrossbarConfig crossbar;
  std::size_t eval_seeds = 1;
  std::filesystem::path out_dir = "run";
  ReportFormat format = ReportFormat::table;
  WeightLayout weight_layout = WeightLayout::per_gate;
  std::optional<std::filesystem::path> weights;  // defaults to <out_dir>/weights.txt
  std::optional<std::filesystem::path> program;

  std::filesystem::path weights_path() const { return weights ? *weights : out_dir / "weights.txt"; }
  void validate() const;
};

struct ConfigKey {
  std::string name;
  std::string help;
};

/// Every accepted key. Command-line flags use the same names.
const std::vector<ConfigKey>& config_keys();

using KeyValues = std::map<std::string, std::string>;

/// Flat `key = value` text; `#` starts a comment. Keys may use `_` or `-`.
KeyValues parse_config_text(const std::string& text);
KeyValues load_config_file(const std::filesystem::path& path);

/// Applies key/value pairs over the defaults. Unknown keys and malformed
/// values throw std::invalid_argument.
RunConfig make_run_config(const KeyValues& kv);

/// key = value dump of every setting, in config_keys() order.
std::string describe(const RunConfig& cfg);

}  // namespace memlstm
