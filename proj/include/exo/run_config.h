#ifndef EXO_RUN_CONFIG_H_
#define EXO_RUN_CONFIG_H_

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "exo/gait.h"
#include "exo/sim.h"

namespace exo {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Everything a command needs, resolved from defaults, an optional config
// file and command-line overrides, in that order.
struct RunConfig {
  Strategy strategy = Strategy::kOnlinePlanning;
  std::string gait_file;  // empty: synthetic gait from `gait`
  SyntheticGaitOptions gait;
  std::string profile = "nominal";
  int steps = 10;
  SimConfig sim;
  std::string output_dir = "out";
  std::uint64_t seed = 1;
  int threads = 0;  // 0: hardware concurrency
  std::vector<double> map_magnitudes{0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.1, 1.2, 1.3};
  std::vector<double> map_durations{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  int map_steps = 10;
  std::string corpus;  // empty: record a corpus
  int bench_cases = 10000;

  // Throws ConfigError on out-of-range values.
  void Validate() const;
};

// Dotted key names, in echo order.
std::vector<std::string> ConfigKeys();
std::string ConfigHelp(std::string_view key);

// Throws ConfigError on an unknown key or a malformed value.
void SetConfigValue(RunConfig& config, std::string_view key, std::string_view value);
std::string GetConfigValue(const RunConfig& config, std::string_view key);

// "key = value" lines; blank lines and '#' comments are skipped. Throws
// ConfigError with the line number on any problem.
void ApplyConfigFile(RunConfig& config, std::istream& in);

// Every key with its resolved value, loadable by ApplyConfigFile.
void WriteConfig(std::ostream& out, const RunConfig& config);

}  // namespace exo

#endif  // EXO_RUN_CONFIG_H_
