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

// ppsq: run, sweep, compare and validate solver configurations.
//
// Exit codes: 0 ok, 2 configuration error, 3 invalid schedule, 4 numeric
// failure at run time.

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ppsq/experiment/config.hpp"
#include "ppsq/experiment/runner.hpp"

namespace {

namespace ex = ppsq::experiment;

enum ExitCode { kOk = 0, kConfigError = 2, kScheduleError = 3, kNumericError = 4 };

std::mutex g_out;

void say(std::ostream& os, const std::string& line) {
  std::lock_guard<std::mutex> lock(g_out);
  os << line << '\n';
}

/// Runs `body` and maps exceptions to exit codes, prefixing messages with
/// `where`.
template <class F>
int guarded(const std::string& where, F&& body) {
  try {
    return body();
  } catch (const ex::ConfigError& e) {
    say(std::cerr, where + ": config error: " + e.what());
    return kConfigError;
  } catch (const ppsq::ScheduleError& e) {
    say(std::cerr, where + ": " + e.what());
    for (const auto& v : e.violations())
      say(std::cerr, "  condition " + std::to_string(v.condition) + " at t=" +
                         std::to_string(v.t) + ": " + v.message);
    return kScheduleError;
  } catch (const std::exception& e) {
    say(std::cerr, where + ": runtime error: " + e.what());
    return kNumericError;
  }
}

int run_one(const std::string& file) {
  return guarded(file, [&] {
    const ex::RunConfig c = ex::load(file);
    const ex::RunResult r = ex::run(c);
    for (const auto& w : r.warnings) say(std::cerr, file + ": warning: " + w);
    const auto path = ex::write_outputs(c, r);
    say(std::cout, file + ": " + ex::summary(r) + " trace=" + path.string());
    return int{kOk};
  });
}

int validate_one(const std::string& file) {
  return guarded(file, [&] {
    const ex::RunConfig c = ex::load(file);
    const ex::Instance in = ex::build(c);
    const ex::Plan p = ex::plan(in);
    std::ostringstream os;
    os << file << ": ok solver=" << ex::to_string(c.solver)
       << " problem=" << in.tag << " T=" << p.iterations
       << " L=" << ppsq::detail::format_double(in.lipschitz)
       << " R=" << ppsq::detail::format_double(in.radius)
       << " sigma=" << ppsq::detail::format_double(in.sigma)
       << " B=" << ppsq::detail::format_double(in.l1_bound)
       << " epsilon_bound=" << ppsq::detail::format_double(p.epsilon);
    say(std::cout, os.str());
    if (!p.target_reached)
      say(std::cerr, file + ": warning: target epsilon not reached by max_iterations");
    return int{kOk};
  });
}

int sweep(const std::string& pattern, unsigned jobs) {
  const auto files = ex::expand_glob(pattern);
  if (files.empty()) {
    say(std::cerr, "sweep: no configuration matches '" + pattern + "'");
    return kConfigError;
  }
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min<unsigned>(jobs, static_cast<unsigned>(files.size()));
  std::vector<int> codes(files.size(), kOk);
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < jobs; ++w)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < files.size();)
        codes[i] = run_one(files[i]);
    });
  for (auto& t : pool) t.join();
  return *std::max_element(codes.begin(), codes.end());
}

ppsq::RunTrace read_trace(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw ex::ConfigError("cannot open '" + file + "'");
  return ppsq::read_csv(in);
}

int compare(const std::string& a, const std::string& b) {
  return guarded("compare", [&] {
    ppsq::RunTrace ta, tb;
    try {
      ta = read_trace(a);
      tb = read_trace(b);
    } catch (const ppsq::InvalidArgument& e) {
      throw ex::ConfigError(e.what());
    }
    ex::CompareReport rep;
    try {
      rep = ex::compare(ta, tb);
    } catch (const ppsq::InvalidArgument& e) {
      throw ex::ConfigError(e.what());
    }
    using ppsq::detail::format_double;
    std::cout << "cumulative_bits,dual_a,dual_b,ratio\n";
    for (const auto& r : rep.rows)
      std::cout << r.bits << ',' << format_double(r.dual_a) << ','
                << format_double(r.dual_b) << ',' << format_double(r.ratio)
                << '\n';
    std::cout << "# rows=" << rep.rows.size()
              << " min_ratio=" << format_double(rep.min_ratio)
              << " max_ratio=" << format_double(rep.max_ratio) << '\n';
    return int{kOk};
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Accelerated primal-dual methods with PPS-quantized gradients"};
  app.require_subcommand(1);

  std::string config;
  auto* run = app.add_subcommand("run", "Run one configuration");
  run->add_option("config", config, "Run configuration (YAML)")->required();

  std::string pattern;
  unsigned jobs = 0;
  auto* sw = app.add_subcommand("sweep", "Run every configuration matching a glob");
  sw->add_option("pattern", pattern, "Configuration glob, e.g. 'configs/*.yaml'")
      ->required();
  sw->add_option("-j,--jobs", jobs, "Parallel runs (default: hardware threads)");

  std::string trace_a, trace_b;
  auto* cmp = app.add_subcommand("compare", "Compare two traces at equal bits");
  cmp->add_option("a", trace_a, "Trace CSV")->required();
  cmp->add_option("b", trace_b, "Trace CSV")->required();

  auto* val = app.add_subcommand("validate", "Check a configuration and its schedule");
  val->add_option("config", config, "Run configuration (YAML)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  if (*run) return run_one(config);
  if (*sw) return sweep(pattern, jobs);
  if (*cmp) return compare(trace_a, trace_b);
  return validate_one(config);
}
