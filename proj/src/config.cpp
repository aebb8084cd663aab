#include "srsi/config.hpp"

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <json.hpp>
#include <sstream>

namespace srsi {

namespace {

using nlohmann::json;

void require_known_keys(const json& object, const std::string& section,
                        std::initializer_list<const char*> known) {
  for (const auto& item : object.items()) {
    bool ok = false;
    for (const char* key : known)
      if (item.key() == key) {
        ok = true;
        break;
      }
    if (!ok) throw ConfigError("unknown key \"" + item.key() + "\" in section \"" + section + "\"");
  }
}

template <typename T>
void read(const json& object, const char* key, T& target) {
  if (!object.contains(key)) return;
  try {
    target = object.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for \"") + key + "\": " + e.what());
  }
}

void read_variants(const json& object, const char* key, std::vector<Variant>& target) {
  if (!object.contains(key)) return;
  std::vector<std::string> names;
  read(object, key, names);
  if (names.empty()) throw ConfigError(std::string("\"") + key + "\" must not be empty");
  target.clear();
  for (const auto& name : names) {
    try {
      target.push_back(variant_from_string(name));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
}

void apply_run_section(const json& object, RunConfig& run) {
  require_known_keys(object, "run",
                     {"variant", "models", "initial_pairs", "initial_reps", "reps_per_iteration",
                      "alpha", "delta", "seed", "budget", "max_iterations", "candidate",
                      "candidate_reps", "kappa", "divergence", "share_lambda", "mle_restarts",
                      "refit_every", "refresh_every"});
  if (object.contains("variant")) {
    std::string name;
    read(object, "variant", name);
    try {
      run.variant = variant_from_string(name);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  read(object, "models", run.num_models);
  read(object, "initial_pairs", run.initial_pairs);
  read(object, "initial_reps", run.initial_reps);
  read(object, "reps_per_iteration", run.reps_per_iteration);
  read(object, "alpha", run.alpha);
  read(object, "delta", run.delta);
  read(object, "seed", run.seed);
  read(object, "budget", run.budget);
  read(object, "max_iterations", run.max_iterations);
  read(object, "candidate", run.candidate);
  read(object, "candidate_reps", run.candidate_reps);
  read(object, "kappa", run.kappa);
  if (object.contains("divergence")) {
    std::string name;
    read(object, "divergence", name);
    try {
      run.divergence = divergence_kind_from_string(name);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  read(object, "share_lambda", run.share_lambda);
  read(object, "mle_restarts", run.mle_restarts);
  read(object, "refit_every", run.refit_every);
  read(object, "refresh_every", run.refresh_every);
}

// Settings used by the published experiments; anything in the file overrides.
void problem_defaults(const std::string& problem, RunConfig& run) {
  if (problem == "mm1k") return;  // RunConfig defaults are the queueing study's
  run.num_models = 150;
  run.initial_pairs = 108;
  run.initial_reps = 2;
  run.reps_per_iteration = 2;
  run.alpha = 0.1;
  run.delta = 1.0;
  run.max_iterations = 100;
}

}  // namespace

ExperimentSpec parse_spec(const std::string& text, const std::string& origin) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  if (!root.is_object()) throw ConfigError(origin + ": top level must be an object");
  require_known_keys(root, "top level",
                     {"problem", "mm1k", "ambulance", "run", "variants", "benchmark", "reclassify",
                      "output", "data_files"});

  ExperimentSpec spec;
  if (!root.contains("problem")) throw ConfigError(origin + ": missing \"problem\"");
  read(root, "problem", spec.problem_name);
  if (spec.problem_name != "mm1k" && spec.problem_name != "ambulance")
    throw ConfigError("unknown problem \"" + spec.problem_name + "\" (expected mm1k or ambulance)");

  if (root.contains("mm1k")) {
    const json& section = root.at("mm1k");
    require_known_keys(section, "mm1k",
                       {"min_capacity", "max_capacity", "cost_per_wait", "revenue", "customers",
                        "sample_size", "true_interarrival_mean", "true_service_mean",
                        "resample_support"});
    read(section, "min_capacity", spec.mm1k.min_capacity);
    read(section, "max_capacity", spec.mm1k.max_capacity);
    read(section, "cost_per_wait", spec.mm1k.cost_per_wait);
    read(section, "revenue", spec.mm1k.revenue);
    read(section, "customers", spec.mm1k.customers);
    read(section, "sample_size", spec.mm1k.sample_size);
    read(section, "true_interarrival_mean", spec.mm1k.true_interarrival_mean);
    read(section, "true_service_mean", spec.mm1k.true_service_mean);
    read(section, "resample_support", spec.mm1k.resample_support);
  }
  if (root.contains("ambulance")) {
    const json& section = root.at("ambulance");
    require_known_keys(section, "ambulance",
                       {"grid_side", "ambulances", "calls_per_hour", "erlang_scale_minutes",
                        "warmup_hours", "window_hours", "total_calls", "map_seed",
                        "frequency_file"});
    read(section, "grid_side", spec.ambulance.sim.grid_side);
    read(section, "ambulances", spec.ambulance.sim.ambulances);
    read(section, "calls_per_hour", spec.ambulance.sim.calls_per_hour);
    read(section, "erlang_scale_minutes", spec.ambulance.sim.erlang_scale_minutes);
    read(section, "warmup_hours", spec.ambulance.sim.warmup_hours);
    read(section, "window_hours", spec.ambulance.sim.window_hours);
    read(section, "total_calls", spec.ambulance.total_calls);
    read(section, "map_seed", spec.ambulance.map_seed);
    read(section, "frequency_file", spec.frequency_file);
  }

  problem_defaults(spec.problem_name, spec.run);
  if (root.contains("run")) apply_run_section(root.at("run"), spec.run);
  read_variants(root, "variants", spec.variants);

  spec.benchmark.variants = {Variant::srsi, Variant::nmc};
  if (root.contains("benchmark")) {
    const json& section = root.at("benchmark");
    require_known_keys(section, "benchmark",
                       {"variants", "macro_runs", "first_seed", "budgets", "workers"});
    read_variants(section, "variants", spec.benchmark.variants);
    read(section, "macro_runs", spec.benchmark.macro_runs);
    read(section, "first_seed", spec.benchmark.first_seed);
    read(section, "budgets", spec.benchmark.budgets);
    read(section, "workers", spec.benchmark.workers);
  }
  if (root.contains("reclassify")) {
    const json& section = root.at("reclassify");
    require_known_keys(section, "reclassify", {"alphas", "deltas", "fresh_models"});
    read(section, "alphas", spec.reclassify.alphas);
    read(section, "deltas", spec.reclassify.deltas);
    read(section, "fresh_models", spec.reclassify.fresh_models);
  }
  if (root.contains("output")) {
    const json& section = root.at("output");
    require_known_keys(section, "output", {"directory", "checkpoint"});
    read(section, "directory", spec.output_dir);
    read(section, "checkpoint", spec.write_checkpoint);
  }
  read(root, "data_files", spec.data_files);
  return spec;
}

ExperimentSpec load_spec(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open spec file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  ExperimentSpec spec = parse_spec(buffer.str(), path);

  const auto base = std::filesystem::path(path).parent_path();
  const auto resolve = [&](std::string& file) {
    if (file.empty()) return;
    std::filesystem::path p(file);
    if (p.is_relative()) p = base / p;
    if (!std::filesystem::exists(p)) throw ConfigError("missing data file: " + p.string());
    file = p.string();
  };
  for (auto& file : spec.data_files) resolve(file);
  resolve(spec.frequency_file);
  return spec;
}

namespace {

std::vector<double> load_frequency_table(const std::string& path, int cells) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open frequency file: " + path);
  std::vector<double> counts;
  std::string line;
  while (std::getline(in, line)) {
    for (char& c : line)
      if (c == ',' || c == ';' || c == '\t') c = ' ';
    std::istringstream fields(line);
    double value = 0.0;
    while (fields >> value) counts.push_back(value);
    if (!fields.eof()) throw ConfigError(path + ": non-numeric frequency entry");
  }
  if (static_cast<int>(counts.size()) != cells)
    throw ConfigError(path + ": expected " + std::to_string(cells) + " entries, found " +
                      std::to_string(counts.size()));
  return counts;
}

}  // namespace

std::shared_ptr<const Problem> make_problem(const ExperimentSpec& spec) {
  std::shared_ptr<const Problem> base;
  try {
    if (spec.problem_name == "mm1k") {
      base = std::make_shared<Mm1kProblem>(spec.mm1k);
    } else {
      AmbulanceProblemConfig config = spec.ambulance;
      if (!spec.frequency_file.empty())
        config.frequency = load_frequency_table(
            spec.frequency_file, config.sim.grid_side * config.sim.grid_side);
      base = std::make_shared<AmbulanceProblem>(std::move(config));
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (spec.data_files.empty()) return base;

  if (static_cast<int>(spec.data_files.size()) != base->num_sources())
    throw ConfigError(base->name() + " expects " + std::to_string(base->num_sources()) +
                      " data files, got " + std::to_string(spec.data_files.size()));
  std::vector<ObservationSet> data;
  for (std::size_t source = 0; source < spec.data_files.size(); ++source) {
    try {
      data.push_back(ObservationSet::from_raw(static_cast<int>(source),
                                              read_observations(spec.data_files[source])));
    } catch (const std::exception& e) {
      throw ConfigError(spec.data_files[source] + ": " + e.what());
    }
  }
  return std::make_shared<FixedDataProblem>(std::move(base), std::move(data));
}

std::string spec_to_json(const ExperimentSpec& spec) {
  json root;
  root["problem"] = spec.problem_name;
  if (spec.problem_name == "mm1k") {
    root["mm1k"] = {{"min_capacity", spec.mm1k.min_capacity},
                    {"max_capacity", spec.mm1k.max_capacity},
                    {"cost_per_wait", spec.mm1k.cost_per_wait},
                    {"revenue", spec.mm1k.revenue},
                    {"customers", spec.mm1k.customers},
                    {"sample_size", spec.mm1k.sample_size},
                    {"true_interarrival_mean", spec.mm1k.true_interarrival_mean},
                    {"true_service_mean", spec.mm1k.true_service_mean},
                    {"resample_support", spec.mm1k.resample_support}};
  } else {
    root["ambulance"] = {{"grid_side", spec.ambulance.sim.grid_side},
                         {"ambulances", spec.ambulance.sim.ambulances},
                         {"calls_per_hour", spec.ambulance.sim.calls_per_hour},
                         {"erlang_scale_minutes", spec.ambulance.sim.erlang_scale_minutes},
                         {"warmup_hours", spec.ambulance.sim.warmup_hours},
                         {"window_hours", spec.ambulance.sim.window_hours},
                         {"total_calls", spec.ambulance.total_calls},
                         {"map_seed", spec.ambulance.map_seed}};
    if (!spec.frequency_file.empty()) root["ambulance"]["frequency_file"] = spec.frequency_file;
  }
  root["run"] = {{"variant", to_string(spec.run.variant)},
                 {"models", spec.run.num_models},
                 {"initial_pairs", spec.run.initial_pairs},
                 {"initial_reps", spec.run.initial_reps},
                 {"reps_per_iteration", spec.run.reps_per_iteration},
                 {"alpha", spec.run.alpha},
                 {"delta", spec.run.delta},
                 {"seed", spec.run.seed},
                 {"budget", spec.run.budget},
                 {"max_iterations", spec.run.max_iterations},
                 {"candidate", spec.run.candidate},
                 {"candidate_reps", spec.run.candidate_reps},
                 {"kappa", spec.run.kappa},
                 {"divergence", to_string(spec.run.divergence)},
                 {"share_lambda", spec.run.share_lambda},
                 {"mle_restarts", spec.run.mle_restarts},
                 {"refit_every", spec.run.refit_every},
                 {"refresh_every", spec.run.refresh_every}};
  json names = json::array();
  for (const Variant v : spec.variants) names.push_back(to_string(v));
  root["variants"] = names;
  json bench_names = json::array();
  for (const Variant v : spec.benchmark.variants) bench_names.push_back(to_string(v));
  root["benchmark"] = {{"variants", bench_names},
                       {"macro_runs", spec.benchmark.macro_runs},
                       {"first_seed", spec.benchmark.first_seed},
                       {"budgets", spec.benchmark.budgets},
                       {"workers", spec.benchmark.workers}};
  if (!spec.reclassify.alphas.empty() || !spec.reclassify.deltas.empty())
    root["reclassify"] = {{"alphas", spec.reclassify.alphas},
                          {"deltas", spec.reclassify.deltas},
                          {"fresh_models", spec.reclassify.fresh_models}};
  root["output"] = {{"directory", spec.output_dir}, {"checkpoint", spec.write_checkpoint}};
  if (!spec.data_files.empty()) root["data_files"] = spec.data_files;
  return root.dump(2) + "\n";
}

}  // namespace srsi
