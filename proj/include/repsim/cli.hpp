#pragma once

#include "repsim/distances.hpp"
#include "repsim/repdata.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace repsim::cli {

enum class Command { validate, dist, distmat, embed, cluster, probe, converge, synth };
enum class OutputFormat { json, csv };
enum class ProbeMode { bound, generalization };

struct RunConfig {
  Command command = Command::validate;
  std::vector<std::filesystem::path> inputs;
  MetricId metric;
  std::vector<double> lambdas = default_lambda_grid();
  bool lambda_given = false;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::optional<std::filesystem::path> output;
  OutputFormat format = OutputFormat::json;
  bool has_header = false;

  // command-specific
  int dims = 2;                                  // embed
  std::vector<std::vector<std::string>> classes; // cluster: optional std_ratio
  ProbeMode probe_mode = ProbeMode::bound;       // probe
  std::size_t tasks = 1000;                      // probe
  std::vector<std::size_t> sizes;                // converge
  SynthSpec synth;                               // synth
};

/// Parses the command line (argv[0] is the program name). Throws InputError on
/// usage errors; returns nullopt when help was printed.
std::optional<RunConfig> parse_args(int argc, const char* const* argv, std::ostream& out);

/// Executes a parsed configuration. Returns the process exit code: 0 on
/// success, 1 on usage or input errors, 2 on numerical failures.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

/// parse_args followed by run, with errors mapped to exit codes.
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace repsim::cli
