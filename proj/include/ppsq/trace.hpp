// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================

// Per-iteration run traces and their CSV form.

#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ppsq/common.hpp"

namespace ppsq {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct TraceRow {
  int t = 0;
  double dual_value = kNaN;
  double primal_gap = kNaN;
  double gap = kNaN;  // feasibility |Ax - b| or consensus gap
  std::uint64_t oracle_calls = 0;  // cumulative
  std::uint64_t bits = 0;          // cumulative
  std::int64_t r = 0;
  std::int64_t M = 0;
  double alpha = kNaN;
  double beta = kNaN;
};

struct RunTrace {
  std::string problem;            // short problem tag
  std::uint64_t fingerprint = 0;  // hash of the problem definition
  std::vector<TraceRow> rows;

  const TraceRow& back() const { return rows.back(); }
};

inline constexpr std::array<std::string_view, 10> kTraceColumns = {
    "t",          "dual_value",
    "primal_gap", "feasibility_or_consensus_gap",
    "cumulative_oracle_calls", "cumulative_bits",
    "r_t",        "M_t",
    "alpha_t",    "beta_t"};

/// 64-bit FNV-1a.
constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace detail {

/// Shortest round-trip representation; NaN becomes the empty field.
inline std::string format_double(double v) {
  if (std::isnan(v)) return {};
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

inline double parse_double(std::string_view s) {
  if (s.empty()) return kNaN;
  double v = 0.0;
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  require(ec == std::errc() && ptr == s.data() + s.size(),
          "trace csv: bad number '" + std::string(s) + "'");
  return v;
}

template <class Int>
Int parse_int(std::string_view s) {
  Int v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  require(ec == std::errc() && ptr == s.data() + s.size(),
          "trace csv: bad integer '" + std::string(s) + "'");
  return v;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace detail

inline std::string csv_header() {
  std::string h;
  for (std::size_t i = 0; i < kTraceColumns.size(); ++i) {
    if (i) h += ',';
    h += kTraceColumns[i];
  }
  return h;
}

inline void write_csv(std::ostream& os, const RunTrace& trace) {
  os << "# problem=" << trace.problem << " fingerprint=" << std::hex
     << trace.fingerprint << std::dec << '\n';
  os << csv_header() << '\n';
  using detail::format_double;
  for (const auto& r : trace.rows) {
    os << r.t << ',' << format_double(r.dual_value) << ','
       << format_double(r.primal_gap) << ',' << format_double(r.gap) << ','
       << r.oracle_calls << ',' << r.bits << ',' << r.r << ',' << r.M << ','
       << format_double(r.alpha) << ',' << format_double(r.beta) << '\n';
  }
}

inline std::string to_csv(const RunTrace& trace) {
  std::ostringstream os;
  write_csv(os, trace);
  return os.str();
}

inline RunTrace read_csv(std::istream& is) {
  RunTrace trace;
  std::string line;
  bool header_seen = false;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      std::istringstream meta(line.substr(1));
      std::string kv;
      while (meta >> kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) continue;
        const auto key = kv.substr(0, eq), value = kv.substr(eq + 1);
        if (key == "problem") trace.problem = value;
        if (key == "fingerprint")
          trace.fingerprint = std::stoull(value, nullptr, 16);
      }
      continue;
    }
    if (!header_seen) {
      require(line == csv_header(), "trace csv: unexpected header '" + line + "'");
      header_seen = true;
      continue;
    }
    const auto f = detail::split_commas(line);
    require(f.size() == kTraceColumns.size(), "trace csv: wrong field count");
    TraceRow r;
    r.t = detail::parse_int<int>(f[0]);
    r.dual_value = detail::parse_double(f[1]);
    r.primal_gap = detail::parse_double(f[2]);
    r.gap = detail::parse_double(f[3]);
    r.oracle_calls = detail::parse_int<std::uint64_t>(f[4]);
    r.bits = detail::parse_int<std::uint64_t>(f[5]);
    r.r = detail::parse_int<std::int64_t>(f[6]);
    r.M = detail::parse_int<std::int64_t>(f[7]);
    r.alpha = detail::parse_double(f[8]);
    r.beta = detail::parse_double(f[9]);
    trace.rows.push_back(r);
  }
  require(header_seen, "trace csv: missing header");
  return trace;
}

}  // namespace ppsq
