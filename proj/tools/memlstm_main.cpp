// memlstm: train the forecasting LSTM, program it onto the GST crossbar model,
// and compare float against crossbar accuracy.

#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "memlstm/commands.hpp"
#include "memlstm/run_config.hpp"

namespace {

struct CommandOptions {
  std::string config_path;
  std::map<std::string, std::string> overrides;
};

void add_config_options(CLI::App* cmd, CommandOptions& opts) {
  cmd->add_option("--config", opts.config_path, "key = value config file");
  for (const auto& key : memlstm::config_keys()) {
    // Each option writes straight into the override map, so only flags
    // actually given on the command line override the file.
    cmd->add_option_function<std::string>(
        "--" + key.name,
        [&opts, name = key.name](const std::string& v) { opts.overrides[name] = v; }, key.help);
  }
}

memlstm::RunConfig resolve(const CommandOptions& opts) {
  memlstm::KeyValues kv;
  if (!opts.config_path.empty()) kv = memlstm::load_config_file(opts.config_path);
  for (const auto& [k, v] : opts.overrides) kv[k] = v;
  return memlstm::make_run_config(kv);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"memlstm: LSTM forecasting on a behavioral GST memristor crossbar"};
  app.require_subcommand(1);

  CommandOptions train_opts, quant_opts, eval_opts, plot_opts;
  auto* train = app.add_subcommand("train", "train the float model and write weights");
  auto* quantize = app.add_subcommand("quantize", "map weights onto the 16-level crossbar");
  auto* evaluate = app.add_subcommand("evaluate", "compare float and crossbar RMSE");
  auto* plot = app.add_subcommand("plot-data", "write delimited prediction and loss curves");
  add_config_options(train, train_opts);
  add_config_options(quantize, quant_opts);
  add_config_options(evaluate, eval_opts);
  add_config_options(plot, plot_opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      memlstm::cmd_train(resolve(train_opts), std::cout);
    } else if (quantize->parsed()) {
      memlstm::cmd_quantize(resolve(quant_opts), std::cout);
    } else if (evaluate->parsed()) {
      memlstm::cmd_evaluate(resolve(eval_opts), std::cout);
    } else if (plot->parsed()) {
      memlstm::cmd_plotdata(resolve(plot_opts), std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
