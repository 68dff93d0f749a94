#pragma once

// Command-line surface: one binary, one subcommand per experiment. A run
// writes <out>/<command>.json (and .csv where tabular) and returns
//   0  every invariant asserted by the command holds
//   1  a numeric failure or a violated invariant, with a diagnostic
//   2  the config or the flags do not match the schema

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "nahmkn/io.hpp"

namespace nahmkn::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitNumeric = 1;
inline constexpr int kExitSchema = 2;

class SchemaError : public Error {
 public:
  using Error::Error;
};

struct CommandInfo {
  std::string name;
  std::string summary;
  std::string artifacts;  // CSV columns and JSON contents, shown in --help
  int default_samples = 0;
};

const std::vector<CommandInfo>& commands();

struct Tolerances {
  double residual = defaults::kResidualTol;
  double newton = defaults::kNewtonTol;
  double kn = defaults::kKnTol;
};

struct RunConfig {
  std::string command;
  int n = 2;
  double step = defaults::kStep;
  int samples = 0;  // 0: the command's default
  std::uint64_t seed = 42;
  std::string out = "out";
  Tolerances tol;
  io::Json params = io::Json::object();

  /// Effective configuration: everything that can change an artifact. The
  /// output directory is excluded.
  io::Json to_json() const;
  std::string hash() const;
};

/// Validates a JSON config and applies it on top of `base`. Unknown keys,
/// wrong types and out-of-range values raise SchemaError.
RunConfig apply_config(const io::Json& j, RunConfig base);

/// Runs one command; diagnostics go to `log`.
int run(const RunConfig& cfg, std::ostream& log);

/// Entry point of the binary.
int main_entry(int argc, char** argv);

}  // namespace nahmkn::cli
