#pragma once

#include <charconv>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "mphom/coincidence.hpp"

namespace mphom {

/// Shortest decimal that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  if (res.ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::invalid_argument("parse_double: bad number '" + std::string(s) + "'");
  return v;
}

inline int parse_int(std::string_view s) {
  int v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::invalid_argument("parse_int: bad integer '" + std::string(s) + "'");
  return v;
}

/// Line `L,X,k_1,...,k_L` with momenta in sigma_k units; photons 1..X are in C1.
inline std::string format_frame(const DetectionOutcome& o) {
  o.validate();
  for (int i = 0; i < o.L; ++i)
    if (o.assignment[i] != (i < o.X ? 1 : 0))
      throw std::invalid_argument("format_frame: record lines need canonical camera order");
  std::string line = std::to_string(o.L) + "," + std::to_string(o.X);
  for (double k : o.momenta) line += "," + format_double(k);
  return line;
}

inline DetectionOutcome parse_frame(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (fields.size() < 3) throw std::invalid_argument("parse_frame: expected L,X,k_1,...");
  const int L = parse_int(fields[0]);
  const int X = parse_int(fields[1]);
  if (L < 1 || int(fields.size()) != L + 2) throw std::invalid_argument("parse_frame: field count does not match L");
  std::vector<double> k(L);
  for (int i = 0; i < L; ++i) k[i] = parse_double(fields[2 + i]);
  return DetectionOutcome::canonical(X, std::move(k));
}

inline void write_record(std::ostream& os, const std::vector<DetectionOutcome>& frames) {
  for (const auto& f : frames) os << format_frame(f) << '\n';
  if (!os) throw std::runtime_error("write_record: stream error");
}

/// Reads frames; blank lines and lines starting with '#' are skipped.
inline std::vector<DetectionOutcome> read_record(std::istream& is) {
  std::vector<DetectionOutcome> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    try {
      out.push_back(parse_frame(line));
    } catch (const std::exception& e) {
      throw std::invalid_argument("read_record: line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace mphom
