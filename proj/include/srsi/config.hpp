#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "srsi/problem.hpp"
#include "srsi/procedure.hpp"

namespace srsi {

// Unusable experiment description: unreadable file, malformed JSON, unknown
// keys, missing referenced files, or out-of-range values caught at parse time.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ReclassifyGrid {
  std::vector<double> alphas;
  std::vector<double> deltas;
  int fresh_models = 0;  // 0 reuses the fitted distributions
};

// One experiment file: a problem, run settings (defaults depend on the
// problem), and optional benchmark/reclassify/output sections.
struct ExperimentSpec {
  std::string problem_name;
  Mm1kProblemConfig mm1k;
  AmbulanceProblemConfig ambulance;
  std::string frequency_file;  // optional counts table for the ambulance map

  RunConfig run;
  std::vector<Variant> variants{Variant::srsi};
  BenchmarkConfig benchmark;
  ReclassifyGrid reclassify;

  std::string output_dir = "out";
  bool write_checkpoint = true;
  std::vector<std::string> data_files;  // per-source observation files
};

// Parses and validates; every referenced file must exist.
ExperimentSpec load_spec(const std::string& path);
ExperimentSpec parse_spec(const std::string& text, const std::string& origin);

std::shared_ptr<const Problem> make_problem(const ExperimentSpec& spec);

// Fully resolved echo of the spec, suitable as a reproducibility record.
std::string spec_to_json(const ExperimentSpec& spec);

}  // namespace srsi
