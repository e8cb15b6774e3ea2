#pragma once

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "memlstm/data.hpp"

namespace memlstm::detail {

class LineReader {
 public:
  explicit LineReader(std::istream& is) : is_(is) {}

  /// Next non-blank line split on whitespace; empty at end of input.
  std::vector<std::string> next() {
    std::string line;
    while (std::getline(is_, line)) {
      ++line_no_;
      std::istringstream ss(line);
      std::vector<std::string> tokens;
      for (std::string t; ss >> t;) tokens.push_back(t);
      if (!tokens.empty()) return tokens;
    }
    return {};
  }

  std::vector<std::string> expect(const std::string& keyword, std::size_t n_values) {
    auto t = next();
    if (t.empty() || t[0] != keyword) fail("expected `" + keyword + "`");
    if (t.size() != n_values + 1) {
      fail(fmt::format("`{}` expects {} values, found {}", keyword, n_values, t.size() - 1));
    }
    return t;
  }

  std::size_t count(const std::string& keyword) { return to_count(expect(keyword, 1)[1]); }

  std::size_t to_count(const std::string& s) const {
    std::size_t pos = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(s, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != s.size() || s.empty() || s[0] == '-') fail("`" + s + "` is not a count");
    return v;
  }

  double to_double(const std::string& s) const {
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v)) {
      fail("`" + s + "` is not a finite number");
    }
    return v;
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, line_no_); }
  std::size_t line() const { return line_no_; }

 private:
  std::istream& is_;
  std::size_t line_no_ = 0;
};

}  // namespace memlstm::detail
