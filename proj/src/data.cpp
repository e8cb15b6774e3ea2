#include "memlstm/data.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace memlstm {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

}  // namespace

TimeSeries parse_series(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(trim(line));
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) throw ParseError("series file is empty", 0);
  if (lines.size() == 1) throw ParseError("series file has a header but no rows", 1);

  TimeSeries series;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const std::size_t line_no = k + 1;
    const std::string& line = lines[k];
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ParseError("expected `label,value`", line_no);
    const std::string label = unquote(trim(line.substr(0, comma)));
    const std::string field = unquote(trim(line.substr(comma + 1)));
    if (field.empty()) throw ParseError("missing value", line_no);
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(field.c_str(), &end);
    if (end != field.c_str() + field.size() || errno == ERANGE || !std::isfinite(v)) {
      throw ParseError("value `" + field + "` is not a finite number", line_no);
    }
    series.labels.push_back(label);
    series.values.push_back(v);
  }
  return series;
}

TimeSeries load_series(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open series file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_series(buf.str());
}

Normalizer fit_normalizer(const TimeSeries& series) {
  if (series.values.empty()) throw std::invalid_argument("fit_normalizer: empty series");
  const auto [lo, hi] = std::minmax_element(series.values.begin(), series.values.end());
  if (!(*lo < *hi)) throw std::invalid_argument("fit_normalizer: series has zero range");
  return {*lo, *hi};
}

TimeSeries normalize(const TimeSeries& series, const Normalizer& n) {
  TimeSeries out = series;
  for (double& v : out.values) v = n.apply(v);
  return out;
}

Vector denormalize(std::span<const double> values, const Normalizer& n) {
  Vector out(values.begin(), values.end());
  for (double& v : out) v = n.invert(v);
  return out;
}

WindowedSeries make_windows(const TimeSeries& series, std::size_t look_back) {
  if (look_back < 1) throw std::invalid_argument("make_windows: look_back must be at least 1");
  const std::size_t n = series.values.size();
  if (n <= look_back) {
    throw std::invalid_argument("make_windows: series of length " + std::to_string(n) +
                                " is too short for look_back " + std::to_string(look_back));
  }
  WindowedSeries w;
  w.look_back = look_back;
  w.samples.reserve(n - look_back);
  for (std::size_t k = 0; k + look_back < n; ++k) {
    const auto first = series.values.begin() + static_cast<std::ptrdiff_t>(k);
    w.samples.push_back({Vector(first, first + static_cast<std::ptrdiff_t>(look_back)),
                         series.values[k + look_back]});
  }
  return w;
}

SplitResult split(double train_fraction, const WindowedSeries& windows) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("split: train fraction must lie in (0, 1)");
  }
  const std::size_t n = windows.size();
  const auto n_train = static_cast<std::size_t>(std::floor(static_cast<double>(n) * train_fraction));
  if (n_train == 0 || n_train == n) {
    throw std::invalid_argument("split: fraction leaves one side empty");
  }
  SplitResult r;
  r.train.look_back = r.test.look_back = windows.look_back;
  const auto mid = windows.samples.begin() + static_cast<std::ptrdiff_t>(n_train);
  r.train.samples.assign(windows.samples.begin(), mid);
  r.test.samples.assign(mid, windows.samples.end());
  return r;
}

double rmse(std::span<const double> predictions, std::span<const double> targets,
            const std::optional<Normalizer>& denorm) {
  if (predictions.size() != targets.size()) {
    throw DimensionError("rmse: predictions and targets differ in length");
  }
  if (predictions.empty()) throw std::invalid_argument("rmse: empty input");
  double sum = 0.0;
  for (std::size_t k = 0; k < predictions.size(); ++k) {
    double p = predictions[k];
    double t = targets[k];
    if (denorm) {
      p = denorm->invert(p);
      t = denorm->invert(t);
    }
    sum += (p - t) * (p - t);
  }
  return std::sqrt(sum / static_cast<double>(predictions.size()));
}

}  // namespace memlstm
