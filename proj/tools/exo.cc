// Command-line front end: gait generation, walks, stability maps, solver
// benchmark. Exit codes: 0 success, 2 usage or config error, 3 fall.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "exo/gait.h"
#include "exo/run_config.h"
#include "exo/sim.h"

namespace {

using exo::RunConfig;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitFall = 3;

// Flags shared by every subcommand. Values are applied after the config
// file, so flags always win.
struct CommonFlags {
  std::string config_file;
  std::vector<std::string> sets;
  std::map<std::string, std::string> overrides;
};

void AddCommonFlags(CLI::App* cmd, CommonFlags* flags) {
  cmd->add_option("--config", flags->config_file, "key = value config file")
      ->check(CLI::ExistingFile);
  cmd->add_option("--set", flags->sets, "override KEY=VALUE, repeatable");
  const std::map<std::string, std::string> aliases = {
      {"output_dir", "--out"},
      {"gait.file", "--gait"},
      {"gait.step_length", "--step-length"},
      {"gait.step_duration", "--step-duration"},
      {"gait.step_width", "--step-width"},
      {"bench.corpus", "--corpus"},
  };
  for (const std::string& key : exo::ConfigKeys()) {
    std::string names = "--" + key;
    if (auto it = aliases.find(key); it != aliases.end()) names += "," + it->second;
    cmd->add_option_function<std::string>(
           names, [flags, key](const std::string& v) { flags->overrides[key] = v; },
           exo::ConfigHelp(key))
        ->type_name("VALUE");
  }
}

RunConfig Resolve(const CommonFlags& flags) {
  RunConfig config;
  if (!flags.config_file.empty()) {
    std::ifstream in(flags.config_file);
    if (!in) throw exo::ConfigError("cannot read " + flags.config_file);
    exo::ApplyConfigFile(config, in);
  }
  for (const std::string& s : flags.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw exo::ConfigError("--set expects KEY=VALUE, got '" + s + "'");
    exo::SetConfigValue(config, s.substr(0, eq), s.substr(eq + 1));
  }
  for (const auto& [key, value] : flags.overrides) exo::SetConfigValue(config, key, value);
  config.Validate();
  return config;
}

std::filesystem::path PrepareOutput(const RunConfig& config) {
  const std::filesystem::path dir(config.output_dir);
  std::filesystem::create_directories(dir);
  std::ofstream echo(dir / "config.txt");
  if (!echo) throw std::runtime_error("cannot write " + (dir / "config.txt").string());
  exo::WriteConfig(echo, config);
  return dir;
}

std::ofstream OpenOutput(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

exo::NominalGait LoadOrGenerateGait(const RunConfig& config) {
  if (!config.gait_file.empty()) return exo::LoadGaitFile(config.gait_file);
  return exo::GenerateSyntheticGait(config.gait, config.sim.params, config.sim.foot);
}

int CmdGaitGen(const RunConfig& config) {
  const exo::NominalGait gait =
      exo::GenerateSyntheticGait(config.gait, config.sim.params, config.sim.foot);
  const std::filesystem::path dir = PrepareOutput(config);
  exo::SaveGaitFile(gait, (dir / "gait.csv").string());
  std::printf("wrote %s\n", (dir / "gait.csv").string().c_str());
  return kExitOk;
}

int CmdSimulate(const RunConfig& config) {
  const exo::Simulator sim(LoadOrGenerateGait(config), config.sim);
  const exo::PatientModel patient = exo::PatientModel::Parse(config.profile);
  const exo::WalkResult result = sim.RunWalk(config.strategy, patient, config.steps);

  const std::filesystem::path dir = PrepareOutput(config);
  std::ofstream trace = OpenOutput(dir / "trace.csv");
  exo::WriteTraceCsv(trace, result.trace);

  std::printf("strategy %s, profile %s\n", std::string(exo::StrategyName(config.strategy)).c_str(),
              patient.Describe().c_str());
  std::printf("%4s  %-7s  %-24s  %10s  %8s  %9s\n", "step", "status", "reason",
              "terminal_m", "duration", "respected");
  for (const exo::StepOutcome& s : result.steps) {
    std::printf("%4d  %-7s  %-24s  %10.5f  %8.3f  %9.3f\n", s.step,
                s.stable ? "stable" : "fallen",
                std::string(exo::FallReasonName(s.reason)).c_str(), s.terminal_error,
                s.duration, s.respected_fraction);
  }
  std::printf("trace: %s\n", (dir / "trace.csv").string().c_str());
  return result.fallen() ? kExitFall : kExitOk;
}

void PrintMap(const exo::StabilityMap& map) {
  std::printf("%s   duration (s):", std::string(exo::StrategyName(map.strategy)).c_str());
  for (double d : map.durations) std::printf(" %4.2f", d);
  std::printf("\n");
  for (std::size_t m = map.magnitudes.size(); m-- > 0;) {
    std::printf("  magnitude %4.0f%%:", 100.0 * map.magnitudes[m]);
    for (std::size_t d = 0; d < map.durations.size(); ++d) {
      const exo::StabilityCell& c = map.at(m, d);
      std::printf("    %c", c.infeasible_parameter ? '.' : (c.stable ? 'o' : 'x'));
    }
    std::printf("\n");
  }
}

int CmdStabilityMap(const RunConfig& config) {
  const exo::Simulator sim(LoadOrGenerateGait(config), config.sim);
  std::vector<exo::StabilityMap> maps;
  for (exo::Strategy s : {exo::Strategy::kTimeRescaling, exo::Strategy::kOnlinePlanning}) {
    maps.push_back(exo::RunStabilityMap(sim, s, config.map_magnitudes, config.map_durations,
                                        config.map_steps, config.threads));
  }
  const std::filesystem::path dir = PrepareOutput(config);
  for (const exo::StabilityMap& m : maps) {
    std::ofstream csv = OpenOutput(
        dir / ("stability_" + std::string(exo::StrategyName(m.strategy)) + ".csv"));
    exo::WriteStabilityCsv(csv, m);
    PrintMap(m);
  }
  std::ofstream svg = OpenOutput(dir / "stability.svg");
  exo::WriteStabilitySvg(svg, maps);
  std::printf("legend: o stable, x fallen, . infeasible parameters\n");
  std::printf("op stable region strictly contains tr: %s\n",
              exo::StrictlyDominates(maps[1], maps[0]) ? "yes" : "no");
  std::printf("wrote %s\n", dir.string().c_str());
  return kExitOk;
}

int CmdBench(const RunConfig& config) {
  std::vector<exo::BenchCase> corpus;
  const std::filesystem::path dir = PrepareOutput(config);
  if (!config.corpus.empty()) {
    std::ifstream in(config.corpus);
    if (!in) throw exo::ConfigError("cannot read corpus " + config.corpus);
    corpus = exo::LoadCorpus(in);
    if (corpus.empty()) throw exo::ConfigError("corpus " + config.corpus + " has no cases");
  } else {
    const exo::Simulator sim(LoadOrGenerateGait(config), config.sim);
    corpus = exo::RecordCorpus(sim, static_cast<std::size_t>(config.bench_cases));
    std::ofstream out = OpenOutput(dir / "corpus.csv");
    exo::SaveCorpus(out, corpus);
  }
  std::mt19937_64 rng(config.seed);
  std::shuffle(corpus.begin(), corpus.end(), rng);
  const exo::BenchStats st = exo::BenchSolver(corpus, config.sim.params, config.sim.planner);

  const nlohmann::json report = {
      {"cases", st.cases},          {"min_ms", st.min * 1e3},
      {"max_ms", st.max * 1e3},     {"mean_ms", st.mean * 1e3},
      {"p50_ms", st.p50 * 1e3},     {"p99_ms", st.p99 * 1e3},
      {"fast_path_fraction", st.fast_path_fraction},
      {"failures", st.failures},
  };
  std::ofstream json = OpenOutput(dir / "bench.jsonl");
  json << report.dump() << '\n';
  std::printf("%s\n", report.dump().c_str());
  std::printf("%8s %9s %9s %9s %9s %9s\n", "cases", "min_ms", "mean_ms", "p50_ms", "p99_ms",
              "max_ms");
  std::printf("%8zu %9.4f %9.4f %9.4f %9.4f %9.4f\n", st.cases, st.min * 1e3, st.mean * 1e3,
              st.p50 * 1e3, st.p99 * 1e3, st.max * 1e3);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rehabilitation exoskeleton walking: reference planning and simulation"};
  app.require_subcommand(1);

  struct Command {
    const char* name;
    const char* help;
    int (*run)(const RunConfig&);
  };
  const std::vector<Command> commands = {
      {"gait-gen", "generate the synthetic nominal gait CSV", CmdGaitGen},
      {"simulate", "run a closed-loop walk and write its trace", CmdSimulate},
      {"stability-map", "square-wave stability maps for both strategies", CmdStabilityMap},
      {"bench", "time the online planner on a recorded corpus", CmdBench},
  };
  std::vector<CommonFlags> flags(commands.size());
  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < commands.size(); ++i) {
    subs.push_back(app.add_subcommand(commands[i].name, commands[i].help));
    AddCommonFlags(subs.back(), &flags[i]);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  for (std::size_t i = 0; i < commands.size(); ++i) {
    if (!subs[i]->parsed()) continue;
    try {
      return commands[i].run(Resolve(flags[i]));
    } catch (const exo::ConfigError& e) {
      std::fprintf(stderr, "error: %s\n", e.what());
    } catch (const exo::InfeasibleGaitError& e) {
      std::fprintf(stderr, "infeasible gait: %s\n", e.what());
    } catch (const std::exception& e) {
      std::fprintf(stderr, "error: %s\n", e.what());
    }
    return kExitUsage;
  }
  return kExitUsage;
}
