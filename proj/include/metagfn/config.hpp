#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>

#include "metagfn/metadynamics.hpp"
#include "metagfn/trainer.hpp"

namespace metagfn {

// a config file that cannot be read: syntax, unknown sections or keys,
// malformed numbers (bad *names* for environments, losses, strategies and
// modes raise std::invalid_argument instead)
struct ConfigParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class RunMode { Train, SampleAm, Eval };
const char* run_mode_name(RunMode m);

// Everything a campaign needs: the training setup, the resolved
// metadynamics parameters, artifact placement, and the repeat/seed plan.
struct RunConfig {
  RunMode mode = RunMode::Train;
  TrainConfig train;
  std::optional<MetadParams> metad;  // resolved per environment
  long am_iterations = 25000;        // sample-am timestep budget
  std::string out_dir = "out";
  int repeats = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

// the per-environment reference setup: MetaGFN over trajectory balance,
// with the environment's metadynamics defaults resolved in
RunConfig default_run_config(const std::string& env_name,
                             const std::string& torus_potential_file = "");

// INI-style sections ([run], [trainer], [loss], [strategy],
// [metadynamics]) of key = value lines; '#' and ';' start comments.
// Settings overlay default_run_config of the configured environment, so a
// partial file is a diff against the reference setup. Unknown sections or
// keys are parse errors.
RunConfig parse_run_config(std::istream& is);

// the effective config, fully resolved at full precision; parsing it back
// reproduces the run
void write_run_config(std::ostream& os, const RunConfig& cfg);

}  // namespace metagfn
