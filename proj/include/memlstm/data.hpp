#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "memlstm/matrix.hpp"

namespace memlstm {

/// Malformed input file. line() is 1-based, or 0 when not tied to a line.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct TimeSeries {
  Vector values;
  std::vector<std::string> labels;  // empty, or one per value
};

/// Reads a two-column CSV: a header line, then `"<label>",<value>` rows.
/// Trailing blank lines are ignored.
TimeSeries load_series(const std::filesystem::path& path);
TimeSeries parse_series(const std::string& text);

/// Affine min-max scaling onto [0, 1].
struct Normalizer {
  double min = 0.0;
  double max = 1.0;

  double apply(double v) const { return (v - min) / (max - min); }
  double invert(double v) const { return min + v * (max - min); }
};

Normalizer fit_normalizer(const TimeSeries& series);
TimeSeries normalize(const TimeSeries& series, const Normalizer& n);
Vector denormalize(std::span<const double> values, const Normalizer& n);

struct Sample {
  Vector input;  // look_back consecutive values
  double target = 0.0;
};

struct WindowedSeries {
  std::vector<Sample> samples;
  std::size_t look_back = 1;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
};

WindowedSeries make_windows(const TimeSeries& series, std::size_t look_back);

struct SplitResult {
  WindowedSeries train;
  WindowedSeries test;
};

/// Chronological split: the first floor(n * train_fraction) samples train.
SplitResult split(double train_fraction, const WindowedSeries& windows);

double rmse(std::span<const double> predictions, std::span<const double> targets,
            const std::optional<Normalizer>& denorm = std::nullopt);

}  // namespace memlstm
