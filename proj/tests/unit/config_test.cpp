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

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "ppsq/experiment/config.hpp"
#include "ppsq/experiment/runner.hpp"

namespace ppsq::experiment {
namespace {

namespace fs = std::filesystem;

const std::string kBase = R"(seed: 1
solver: primal_dual
compression: pps
problem:
  kind: quadratic
  seed: 1
  dim: 6
  constraints: 2
schedule:
  policy: constant
  r: 1
  M: 1000
  beta:
    factor: 2
stopping:
  iterations: 50
)";

const std::string kRing = R"(seed: 2
solver: decentralized
compression: pps
problem:
  kind: quadratic
  seed: 7
  dim: 3
topology:
  kind: ring
  nodes: 4
schedule:
  policy: constant
  r: 1
  M: 100
  beta:
    factor: 2
stopping:
  iterations: 30
output:
  edge_log: edges.csv
)";

/// Fresh directory under the system temp dir, removed on destruction.
struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() /
           ("ppsq_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(path / name) << text;
    return path / name;
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int error_line(const std::string& text) {
  try {
    parse(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return -1;
}

// ---------------------------------------------------------------------------
// Parsing.

TEST(Config, ParsesBase) {
  const RunConfig c = parse(kBase, ".", "base");
  EXPECT_EQ(c.name, "base");
  EXPECT_EQ(c.solver, SolverKind::primal_dual);
  EXPECT_EQ(c.problem.dim, 6);
  EXPECT_EQ(*c.schedule.M, 1000);
  EXPECT_EQ(*c.schedule.beta_factor, 2.0);
  EXPECT_EQ(*c.stopping.iterations, 50);
  EXPECT_EQ(c.output.trace, "base.csv");
}

TEST(Config, SerialiseRoundTripIsIdempotent) {
  for (const auto& text : {kBase, kRing}) {
    const RunConfig c = parse(text);
    const std::string once = serialise(c);
    const RunConfig back = parse(once);
    EXPECT_EQ(back, c) << once;
    EXPECT_EQ(serialise(back), once);
  }
}

TEST(Config, ShippedConfigsRoundTrip) {
  for (const auto& f : expand_glob(std::string(PPSQ_CONFIG_DIR) + "/*.yaml")) {
    SCOPED_TRACE(f);
    const RunConfig c = load(f);
    EXPECT_EQ(parse(serialise(c), c.base_dir), c);
  }
}

TEST(Config, UnknownKeyReportsItsLine) {
  std::string text = kBase;
  text.insert(text.find("  constraints"), "  dims: 4\n");
  EXPECT_EQ(error_line(text), 8);
  try {
    parse(text);
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("dims"), std::string::npos) << e.what();
  }
}

TEST(Config, UnknownTopLevelKey) {
  EXPECT_EQ(error_line(kBase + "iteratons: 5\n"), 17);
}

TEST(Config, BadValueReportsItsLine) {
  std::string text = kBase;
  text.replace(text.find("M: 1000"), 7, "M: lots");
  EXPECT_EQ(error_line(text), 12);
}

TEST(Config, YamlSyntaxErrorHasLine) {
  EXPECT_EQ(error_line("seed: 1\nproblem: [\n"), 3);
}

TEST(Config, MissingTopologyForDecentralized) {
  std::string text = kRing;
  text.erase(text.find("topology:"), std::string("topology:\n  kind: ring\n  nodes: 4\n").size());
  EXPECT_THROW(parse(text), ConfigError);
}

TEST(Config, TopologyRejectedForCentralisedSolvers) {
  EXPECT_THROW(parse(kBase + "topology:\n  kind: ring\n  nodes: 3\n"), ConfigError);
}

TEST(Config, ValueChecks) {
  auto with = [](std::string from, std::string to) {
    std::string t = kBase;
    t.replace(t.find(from), from.size(), to);
    return t;
  };
  EXPECT_THROW(parse(with("solver: primal_dual", "solver: newton")), ConfigError);
  EXPECT_THROW(parse(with("compression: pps", "compression: zip")), ConfigError);
  EXPECT_THROW(parse(kBase + "float_bits: 16\n"), ConfigError);
  EXPECT_THROW(parse(kBase + "delta: 1\n"), ConfigError);
  EXPECT_THROW(parse(kBase + "eval_every: 0\n"), ConfigError);
  EXPECT_THROW(parse(with("iterations: 50", "iterations: 50\n  target_epsilon: 1")),
               ConfigError);
  EXPECT_THROW(parse(with("iterations: 50", "iterations: -1")), ConfigError);
  EXPECT_THROW(parse(kBase + "output:\n  edge_log: e.csv\n"), ConfigError);
  EXPECT_THROW(parse(""), ConfigError);
}

TEST(Config, MissingFileIsConfigError) {
  EXPECT_THROW(load("/nonexistent/run.yaml"), ConfigError);
  std::string t = kBase;
  t.replace(t.find("  dim: 6\n"), 9, "  centers_file: nope.csv\n");
  EXPECT_THROW(parse(t), ConfigError);
}

TEST(Config, CentersFileResolvesAgainstConfigDir) {
  TempDir d("centers");
  fs::copy_file(fs::path(PPSQ_TEST_DATA_DIR) / "centers3.csv", d.path / "c.csv");
  std::string t = kRing;
  t.replace(t.find("  dim: 3\n"), 9, "  centers_file: c.csv\n");
  t.replace(t.find("nodes: 4"), 8, "nodes: 3");
  const auto file = d.write("ring.yaml", t);
  const Instance in = build(load(file));
  EXPECT_EQ(in.nodes.size(), 3u);
  EXPECT_EQ(in.message_dim, 3);
}

TEST(Config, FingerprintIgnoresSolverSettings) {
  const RunConfig a = parse(kBase);
  std::string t = kBase;
  t.replace(t.find("M: 1000"), 7, "M: 5");
  t.replace(t.find("seed: 1\nsolver"), 7, "seed: 9");
  const RunConfig b = parse(t);
  EXPECT_EQ(problem_fingerprint(a), problem_fingerprint(b));
  t.replace(t.find("dim: 6"), 6, "dim: 7");
  EXPECT_NE(problem_fingerprint(a), problem_fingerprint(parse(t)));
}

// ---------------------------------------------------------------------------
// Runner.

TEST(Runner, DeterministicTraces) {
  for (const auto& text : {kBase, kRing}) {
    const RunConfig c = parse(text);
    EXPECT_EQ(to_csv(run(c).trace), to_csv(run(c).trace));
  }
}

TEST(Runner, SeedChangesTrace) {
  std::string t = kBase;
  t.replace(t.find("seed: 1\nsolver"), 7, "seed: 2");
  EXPECT_NE(to_csv(run(parse(kBase)).trace), to_csv(run(parse(t)).trace));
}

TEST(Runner, TraceShape) {
  const RunResult r = run(parse(kBase));
  ASSERT_EQ(r.trace.rows.size(), 51u);
  for (std::size_t i = 0; i < r.trace.rows.size(); ++i) {
    const TraceRow& row = r.trace.rows[i];
    EXPECT_EQ(row.t, static_cast<int>(i));
    EXPECT_EQ(row.oracle_calls, i + 1);
    EXPECT_EQ(row.M, 1000);
    if (i > 0) {
      EXPECT_GT(row.bits, r.trace.rows[i - 1].bits);
    }
  }
  EXPECT_EQ(r.trace.problem, "quadratic/primal_dual");
}

TEST(Runner, TargetEpsilonPicksFirstSufficientT) {
  // Target halfway along the profile of a fixed-T run. The default beta
  // makes the profile decreasing; a constant beta lets the noise term grow.
  std::string base = kBase;
  base.replace(base.find("  beta:\n    factor: 2\n"), 22, "");
  std::string fixed = base;
  fixed.replace(fixed.find("iterations: 50"), 14, "iterations: 400");
  const Instance ref = build(parse(fixed));
  const auto eps = epsilon_profile(schedule_inputs(ref).constants,
                                   plan(ref).schedule, ref.radius,
                                   ref.lipschitz, ref.a_norm,
                                   BoundVariant::primal_dual);
  const double target = eps[200];
  std::ostringstream os;
  os.precision(17);
  os << "target_epsilon: " << target << "\n  max_iterations: 400";
  std::string t = base;
  t.replace(t.find("iterations: 50"), 14, os.str());
  const Plan p = plan(build(parse(t)));
  ASSERT_TRUE(p.target_reached);
  EXPECT_EQ(p.iterations, 200);
  EXPECT_LE(p.epsilon, target);
  EXPECT_GT(eps[199], target);
  EXPECT_EQ(run(parse(t)).trace.back().t, 200);
}

TEST(Runner, TargetEpsilonNotReachedWarns) {
  std::string t = kBase;
  t.replace(t.find("iterations: 50"), 14, "target_epsilon: 1e-9\n  max_iterations: 20");
  const RunResult r = run(parse(t));
  EXPECT_FALSE(r.plan.target_reached);
  EXPECT_EQ(r.trace.back().t, 20);
  ASSERT_FALSE(r.warnings.empty());
}

TEST(Runner, InvalidScheduleThrows) {
  std::string t = kBase;
  t.replace(t.find("factor: 2"), 9, "factor: 0.5");
  EXPECT_THROW(plan(build(parse(t))), ScheduleError);
}

TEST(Runner, OutputDirOverride) {
  TempDir d("outdir");
  const RunConfig c = parse(kRing, ".", "ring");
  ::setenv(kOutputDirEnv, d.path.c_str(), 1);
  const auto path = write_outputs(c, run(c));
  ::unsetenv(kOutputDirEnv);
  EXPECT_EQ(path, d.path / "ring.csv");
  EXPECT_TRUE(fs::exists(d.path / "edges.csv"));
  std::ifstream in(path);
  EXPECT_EQ(read_csv(in).rows.size(), 31u);
}

TEST(Runner, CompareWithItselfHasUnitRatio) {
  const RunTrace tr = run(parse(kBase)).trace;
  const CompareReport rep = compare(tr, tr);
  ASSERT_EQ(rep.rows.size(), tr.rows.size());
  EXPECT_EQ(rep.min_ratio, 1.0);
  EXPECT_EQ(rep.max_ratio, 1.0);
}

TEST(Runner, CompareRejectsDifferentProblems) {
  const RunTrace a = run(parse(kBase)).trace;
  std::string t = kBase;
  t.replace(t.find("dim: 6"), 6, "dim: 5");
  EXPECT_THROW(compare(a, run(parse(t)).trace), InvalidArgument);
}

TEST(Runner, CompareMatchesAtEqualBits) {
  // Same problem at two M: b spends more bits per step, so each row of a
  // pairs with the last row of b within a's budget.
  std::string t = kBase;
  t.replace(t.find("M: 1000"), 7, "M: 3000");
  const RunTrace a = run(parse(kBase)).trace;
  const RunTrace b = run(parse(t)).trace;
  const CompareReport rep = compare(a, b);
  for (const auto& row : rep.rows) {
    const TraceRow* best = nullptr;
    for (const auto& r : b.rows)
      if (r.bits <= row.bits) best = &r;
    ASSERT_NE(best, nullptr);
    EXPECT_EQ(row.dual_b, best->dual_value);
  }
}

// ---------------------------------------------------------------------------
// Command line.

int cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " '" + std::string(PPSQ_CLI_PATH) + "' " + args +
                          " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Cli, ExitCodes) {
  TempDir d("cli");
  const std::string env = "PPSQ_OUTPUT_DIR='" + d.path.string() + "'";
  const auto ok = d.write("ok.yaml", kBase);
  std::string bad_schedule = kBase;
  bad_schedule.replace(bad_schedule.find("factor: 2"), 9, "factor: 0.5");
  const auto sched = d.write("sched.yaml", bad_schedule);
  const auto unknown = d.write("unknown.yaml", kBase + "colour: red\n");

  EXPECT_EQ(cli("validate " + ok.string(), env), 0);
  EXPECT_EQ(cli("run " + ok.string(), env), 0);
  EXPECT_TRUE(fs::exists(d.path / "ok.csv"));
  EXPECT_EQ(cli("validate " + unknown.string(), env), 2);
  EXPECT_EQ(cli("run /nonexistent.yaml", env), 2);
  EXPECT_EQ(cli("validate " + sched.string(), env), 3);
  EXPECT_EQ(cli("run " + sched.string(), env), 3);
  EXPECT_EQ(cli("frobnicate", env), 2);
  EXPECT_EQ(cli("", env), 2);
  EXPECT_EQ(cli("--help", env), 0);
}

TEST(Cli, RunWritesIdenticalTraces) {
  TempDir a("cli_a"), b("cli_b");
  const auto cfg = a.write("cfg.yaml", kRing);
  ASSERT_EQ(cli("run " + cfg.string(), "PPSQ_OUTPUT_DIR='" + a.path.string() + "'"), 0);
  ASSERT_EQ(cli("run " + cfg.string(), "PPSQ_OUTPUT_DIR='" + b.path.string() + "'"), 0);
  EXPECT_EQ(slurp(a.path / "cfg.csv"), slurp(b.path / "cfg.csv"));
  EXPECT_EQ(slurp(a.path / "edges.csv"), slurp(b.path / "edges.csv"));
  EXPECT_EQ(cli("compare " + (a.path / "cfg.csv").string() + " " +
                (b.path / "cfg.csv").string()),
            0);
}

TEST(Cli, SweepRunsEveryMatch) {
  TempDir d("sweep");
  d.write("a.yaml", kBase);
  d.write("b.yaml", kRing);
  const std::string env = "PPSQ_OUTPUT_DIR='" + d.path.string() + "'";
  EXPECT_EQ(cli("sweep '" + (d.path / "*.yaml").string() + "' -j 2", env), 0);
  EXPECT_TRUE(fs::exists(d.path / "a.csv"));
  EXPECT_TRUE(fs::exists(d.path / "b.csv"));
  EXPECT_EQ(cli("sweep '" + (d.path / "*.none").string() + "'", env), 2);
  d.write("c.yaml", kBase + "bogus: 1\n");
  EXPECT_EQ(cli("sweep '" + (d.path / "*.yaml").string() + "' -j 1", env), 2);
}

TEST(Cli, CompareRejectsDifferentProblemsAndBadFiles) {
  TempDir d("cmp");
  const std::string env = "PPSQ_OUTPUT_DIR='" + d.path.string() + "'";
  ASSERT_EQ(cli("run " + d.write("a.yaml", kBase).string(), env), 0);
  ASSERT_EQ(cli("run " + d.write("b.yaml", kRing).string(), env), 0);
  d.write("junk.csv", "not,a,trace\n");
  const auto a = (d.path / "a.csv").string(), b = (d.path / "b.csv").string();
  EXPECT_EQ(cli("compare " + a + " " + b), 2);
  EXPECT_EQ(cli("compare " + a + " " + (d.path / "junk.csv").string()), 2);
  EXPECT_EQ(cli("compare " + a + " /nonexistent.csv"), 2);
}

TEST(Cli, ShippedConfigsValidate) {
  for (const auto& f : expand_glob(std::string(PPSQ_CONFIG_DIR) + "/*.yaml")) {
    SCOPED_TRACE(f);
    EXPECT_EQ(cli("validate '" + f + "'"), 0);
  }
}

}  // namespace
}  // namespace ppsq::experiment
