// Copyright 2026 The rtexec Authors
//
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

#ifndef RTEXEC__CLI_HPP_
#define RTEXEC__CLI_HPP_

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rtexec/config.hpp"
#include "rtexec/errors.hpp"
#include "rtexec/metrics_csv.hpp"
#include "rtexec/trace_check.hpp"
#include "rtexec/workload.hpp"

namespace rtexec
{
namespace cli
{

enum ExitCode : int
{
  kOk = 0,
  kValidation = 1,
  kInvariant = 2,
  kIo = 3,
};

class IoError : public Error
{
public:
  using Error::Error;
};

class InvariantFailure : public Error
{
public:
  using Error::Error;
};

inline std::string read_file(const std::string & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open " + path);
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) {
    throw IoError("cannot read " + path);
  }
  return ss.str();
}

inline void write_file(const std::string & path, const std::string & text)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot open " + path + " for writing");
  }
  out << text;
  out.close();
  if (!out) {
    throw IoError("cannot write " + path);
  }
}

/// The scenario for one value of a sweep.
///
/// case1: HPRT budget fraction in (0, 1]. case2: nominal budget fraction in
/// (0, 1], which FIFO ignores. workconserving: LPBE sleep fraction in [0, 1].
/// Anything else is a config path; every sporadic subscription in it gets
/// budget = value x repl_period.
inline Scenario sweep_scenario(
  const std::string & experiment, const Ratio & value, const std::optional<Scenario> & custom)
{
  const bool unit = value > Ratio(0, 1) && value <= Ratio(1, 1);
  if (experiment == "case1") {
    return build_case1(value);
  }
  if (experiment == "case2") {
    if (!unit) {
      throw InvalidParams("sweep.values", "budget fraction must be in (0, 1]");
    }
    return build_case2();
  }
  if (experiment == "workconserving") {
    return build_workconserving(value);
  }
  if (!custom) {
    throw InvalidParams("sweep.experiment", "no scenario for " + experiment);
  }
  if (!unit) {
    throw InvalidParams("sweep.values", "budget fraction must be in (0, 1]");
  }
  Scenario s = *custom;
  bool any = false;
  for (auto & sub : s.subscriptions) {
    if (sub.sched.policy == Policy::Sporadic) {
      sub.sched.init_budget = value.scale(sub.sched.repl_period);
      any = true;
    }
  }
  if (!any) {
    throw InvalidParams("sweep.experiment", "config has no SCHED_SPORADIC subscription");
  }
  s.validate();
  return s;
}

/// Run with scheduler invariants checked after every event.
inline RunResult run_checked(const Scenario & scenario)
{
  Simulation sim(scenario);
  std::optional<std::string> violation;
  TimeNs when;
  sim.set_observer(
    [&](const Event &) {
      if (!violation) {
        violation = sim.cpu().check_invariants();
        when = sim.kernel().now();
      }
    });
  sim.run();
  if (violation) {
    throw InvariantFailure(
            "scheduler invariant violated at " + std::to_string(when.count()) + ": " +
            *violation);
  }
  return RunResult{sim.metrics(), sim.kernel().trace()};
}

inline int cmd_run(
  const std::string & config_path, const std::string & trace_path,
  const std::string & metrics_path, std::ostream & out)
{
  const auto scenario = parse_config(read_file(config_path));
  const auto result = run_checked(scenario);
  std::ostringstream csv;
  write_metrics_csv(csv, result.metrics);
  if (metrics_path.empty() || metrics_path == "-") {
    out << csv.str();
  } else {
    write_file(metrics_path, csv.str());
  }
  if (!trace_path.empty()) {
    write_file(trace_path, result.trace.to_text());
  }
  return kOk;
}

inline int cmd_sweep(
  const std::string & experiment, const std::vector<std::string> & values,
  const std::string & out_path, std::ostream & out)
{
  if (values.empty()) {
    throw InvalidParams("sweep.values", "empty sweep list");
  }
  std::vector<Ratio> ratios;
  for (const auto & v : values) {
    ratios.push_back(Ratio::parse(v));
  }
  std::optional<Scenario> custom;
  if (experiment != "case1" && experiment != "case2" && experiment != "workconserving") {
    custom = parse_config(read_file(experiment));
  }
  // Validate every value before running anything.
  std::vector<Scenario> scenarios;
  for (const auto & r : ratios) {
    scenarios.push_back(sweep_scenario(experiment, r, custom));
  }
  std::ostringstream csv;
  csv << kMetricsCsvHeader << '\n';
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    write_metrics_rows(csv, run_checked(scenarios[i]).metrics, ratios[i].to_string());
  }
  if (out_path.empty() || out_path == "-") {
    out << csv.str();
  } else {
    write_file(out_path, csv.str());
  }
  return kOk;
}

inline int cmd_check_trace(const std::string & trace_path, std::ostream & out)
{
  std::istringstream in(read_file(trace_path));
  const auto records = parse_trace(in);
  const auto report = check_trace(records);
  out << report.to_text();
  for (const auto & [key, value] : report.stats) {
    out << key << ' ' << value << '\n';
  }
  return report.all_passed() ? kOk : kInvariant;
}

inline int cmd_gen_config(const std::string & dir, std::ostream & out)
{
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw IoError("cannot create " + dir + ": " + ec.message());
  }
  const std::vector<std::pair<std::string, Scenario>> files = {
    {"case1.ini", build_case1(Ratio(3, 10))},
    {"case2.ini", build_case2()},
    {"workconserving.ini", build_workconserving(Ratio(1, 2))},
  };
  for (const auto & [name, scenario] : files) {
    const auto path = (std::filesystem::path(dir) / name).string();
    write_file(path, write_config(scenario));
    out << path << '\n';
  }
  return kOk;
}

/// Entry point shared by the binary and the tests.
inline int main(int argc, const char * const * argv, std::ostream & out, std::ostream & err)
{
  CLI::App app{"Discrete-event simulator of a budget-based real-time executor", "rtexec"};
  app.require_subcommand(1);

  std::string config_path, trace_path, metrics_path;
  auto * run = app.add_subcommand("run", "Run one scenario and write metrics CSV");
  run->add_option("config", config_path, "Scenario file")->required();
  run->add_option("--trace", trace_path, "Write the event trace to this file");
  run->add_option("--metrics", metrics_path, "Write metrics CSV here instead of stdout");

  std::string experiment, out_path;
  std::vector<std::string> values;
  auto * sweep = app.add_subcommand("sweep", "Run a parameter sweep and write metrics CSV");
  sweep->add_option("experiment", experiment, "case1, case2, workconserving or a config path")
  ->required();
  sweep->add_option("--values", values, "Comma-separated sweep values")
  ->delimiter(',')->required();
  sweep->add_option("--out", out_path, "Write CSV here instead of stdout");

  std::string check_path;
  auto * check = app.add_subcommand("check-trace", "Check invariants over a trace file");
  check->add_option("trace", check_path, "Trace file")->required();

  std::string dir = ".";
  auto * gen = app.add_subcommand("gen-config", "Write the built-in scenarios as config files");
  gen->add_option("--dir", dir, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp & e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError & e) {
    err << "rtexec: " << e.what() << '\n';
    return kValidation;
  }

  try {
    if (*run) {
      return cmd_run(config_path, trace_path, metrics_path, out);
    }
    if (*sweep) {
      return cmd_sweep(experiment, values, out_path, out);
    }
    if (*check) {
      return cmd_check_trace(check_path, out);
    }
    return cmd_gen_config(dir, out);
  } catch (const IoError & e) {
    err << "rtexec: " << e.what() << '\n';
    return kIo;
  } catch (const InvalidParams & e) {
    err << "rtexec: invalid " << e.what() << '\n';
    return kValidation;
  } catch (const DuplicateTopic & e) {
    err << "rtexec: " << e.what() << '\n';
    return kValidation;
  } catch (const TraceParseError & e) {
    err << "rtexec: " << check_path << ": " << e.what() << '\n';
    return kValidation;
  } catch (const Error & e) {
    err << "rtexec: " << e.what() << '\n';
    return kInvariant;
  }
}

}  // namespace cli
}  // namespace rtexec

#endif  // RTEXEC__CLI_HPP_
