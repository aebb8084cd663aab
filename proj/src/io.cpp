#include "srsi/io.hpp"

#include <charconv>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace srsi {

std::string format_double(double value) {
  char buffer[64];
  const auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  if (ec != std::errc{}) return "nan";
  return std::string(buffer, end);
}

namespace {

std::string joined_members(const RiskSetEstimate& set, const std::vector<std::string>& labels) {
  std::string out;
  for (const int x : set.members()) {
    if (!out.empty()) out += ';';
    out += labels.empty() ? std::to_string(x) : labels[static_cast<std::size_t>(x)];
  }
  return out;
}

}  // namespace

std::string risk_set_json(const RiskSetEstimate& set, const std::vector<std::string>& labels) {
  nlohmann::json root;
  root["alpha"] = set.alpha;
  root["delta"] = set.delta;
  root["candidate"] = set.xhat;
  root["members"] = set.members();
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t x = 0; x < set.probability.size(); ++x) {
    rows.push_back({{"index", x},
                    {"label", labels.empty() ? std::to_string(x) : labels[x]},
                    {"probability", set.probability[x]},
                    {"included", set.included[x] != 0}});
  }
  root["solutions"] = rows;
  return root.dump(2) + "\n";
}

std::string risk_set_csv(const RiskSetEstimate& set, const std::vector<std::string>& labels) {
  std::string out = "solution,label,probability,included\n";
  for (std::size_t x = 0; x < set.probability.size(); ++x) {
    out += std::to_string(x);
    out += ',';
    out += labels.empty() ? std::to_string(x) : labels[x];
    out += ',';
    out += format_double(set.probability[x]);
    out += ',';
    out += set.included[x] ? '1' : '0';
    out += '\n';
  }
  return out;
}

std::string trace_csv(const std::vector<TraceRow>& trace) {
  std::string out = "iteration,solution,model,mode,criterion,set_size,spent,drift\n";
  for (const auto& row : trace) {
    out += std::to_string(row.iteration);
    out += ',';
    out += std::to_string(row.solution);
    out += ',';
    out += std::to_string(row.model);
    out += ',';
    out += row.mode == SamplingMode::pairwise ? "pairwise" : "single";
    out += ',';
    out += format_double(row.criterion);
    out += ',';
    out += std::to_string(row.set_size);
    out += ',';
    out += std::to_string(row.spent);
    out += ',';
    out += format_double(row.drift);
    out += '\n';
  }
  return out;
}

std::string frequency_csv(const std::vector<std::uint64_t>& counts,
                          const std::vector<std::string>& labels) {
  std::string out = "solution,label,replications\n";
  for (std::size_t x = 0; x < counts.size(); ++x) {
    out += std::to_string(x);
    out += ',';
    out += labels.empty() ? std::to_string(x) : labels[x];
    out += ',';
    out += std::to_string(counts[x]);
    out += '\n';
  }
  return out;
}

std::string diffs_csv(const GpModel& gp, int candidate) {
  std::string out = "solution,model,mu_diff,sigma_diff\n";
  for (int x = 0; x < gp.num_solutions(); ++x) {
    for (int b = 0; b < gp.num_models(); ++b) {
      out += std::to_string(x);
      out += ',';
      out += std::to_string(b);
      out += ',';
      out += format_double(gp.mu()[gp.flat(candidate, b)] - gp.mu()[gp.flat(x, b)]);
      out += ',';
      out += format_double(gp.sigma_diff(candidate, x, b));
      out += '\n';
    }
  }
  return out;
}

std::string snapshots_csv(const std::vector<BudgetSnapshot>& snapshots) {
  std::string out = "budget,spent,set_size,members\n";
  for (const auto& snap : snapshots) {
    out += std::to_string(snap.budget);
    out += ',';
    out += std::to_string(snap.spent);
    out += ',';
    out += std::to_string(snap.estimate.size());
    out += ',';
    out += joined_members(snap.estimate, {});
    out += '\n';
  }
  return out;
}

std::string benchmark_runs_csv(const BenchmarkResult& result) {
  std::string out =
      "variant,seed,budget,spent,set_size,oracle_size,misclassified,includes_oracle,identified\n";
  for (const auto& row : result.runs) {
    out += to_string(row.variant);
    out += ',';
    out += std::to_string(row.seed);
    out += ',';
    out += std::to_string(row.budget);
    out += ',';
    out += std::to_string(row.spent);
    out += ',';
    out += std::to_string(row.set_size);
    out += ',';
    out += std::to_string(row.oracle_size);
    out += ',';
    out += std::to_string(row.misclassified);
    out += ',';
    out += row.includes_oracle ? '1' : '0';
    out += ',';
    out += row.identified ? '1' : '0';
    out += '\n';
  }
  return out;
}

std::string benchmark_curves_csv(const BenchmarkResult& result) {
  std::string out = "variant,budget,inclusion,identification,misclassification\n";
  for (const auto& point : result.curves) {
    out += to_string(point.variant);
    out += ',';
    out += std::to_string(point.budget);
    out += ',';
    out += format_double(point.metrics.inclusion);
    out += ',';
    out += format_double(point.metrics.identification);
    out += ',';
    out += format_double(point.metrics.misclassification);
    out += '\n';
  }
  return out;
}

std::string reclassify_csv(const std::vector<std::vector<RiskSetEstimate>>& grid,
                           const std::vector<std::string>& labels) {
  std::string out = "alpha,delta,set_size,members\n";
  for (const auto& row : grid) {
    for (const auto& set : row) {
      out += format_double(set.alpha);
      out += ',';
      out += format_double(set.delta);
      out += ',';
      out += std::to_string(set.size());
      out += ',';
      out += joined_members(set, labels);
      out += '\n';
    }
  }
  return out;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

void write_run_artifacts(const std::string& directory, const RunResult& result,
                         const std::vector<std::string>& labels, const std::string& config_json,
                         const std::vector<DirichletPosterior>& posteriors, bool with_checkpoint) {
  const std::filesystem::path dir(directory);
  std::filesystem::create_directories(dir);
  write_text_file((dir / "config.json").string(), config_json);
  write_text_file((dir / "riskset.json").string(), risk_set_json(result.final_set, labels));
  write_text_file((dir / "riskset.csv").string(), risk_set_csv(result.final_set, labels));
  write_text_file((dir / "frequency.csv").string(),
                  frequency_csv(result.replications_per_solution, labels));
  if (!result.trace.empty())
    write_text_file((dir / "trace.csv").string(), trace_csv(result.trace));
  if (!result.snapshots.empty())
    write_text_file((dir / "snapshots.csv").string(), snapshots_csv(result.snapshots));
  if (result.gp) {
    write_text_file((dir / "diffs.csv").string(), diffs_csv(*result.gp, result.candidate));
    if (with_checkpoint)
      save_checkpoint((dir / "checkpoint.bin").string(), *result.gp, posteriors,
                      result.final_set.alpha, result.final_set.delta, result.candidate, labels);
  }
}

namespace {

constexpr char kMagic[8] = {'S', 'R', 'S', 'I', 'G', 'P', 'C', '1'};

// Integers and double bit patterns are serialized little-endian explicitly,
// so files are portable across hosts.
class Writer {
 public:
  explicit Writer(const std::string& path) : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw std::runtime_error("cannot write checkpoint: " + path);
  }
  void raw(const void* data, std::size_t size) {
    out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
  }
  void u64(std::uint64_t v) {
    char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    raw(bytes, 8);
  }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    u64(bits);
  }
  void str(const std::string& s) {
    u64(s.size());
    raw(s.data(), s.size());
  }
  void finish(const std::string& path) {
    out_.flush();
    if (!out_) throw std::runtime_error("write failed: " + path);
  }

 private:
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::string& path) : in_(path, std::ios::binary) {
    if (!in_) throw CheckpointError("cannot open checkpoint: " + path);
  }
  void raw(void* data, std::size_t size) {
    in_.read(static_cast<char*>(data), static_cast<std::streamsize>(size));
    if (static_cast<std::size_t>(in_.gcount()) != size)
      throw CheckpointError("truncated checkpoint");
  }
  std::uint64_t u64() {
    unsigned char bytes[8];
    raw(bytes, 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    return v;
  }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64() {
    const std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::string str(std::uint64_t max_len = 1 << 20) {
    const std::uint64_t len = u64();
    if (len > max_len) throw CheckpointError("implausible string length in checkpoint");
    std::string s(static_cast<std::size_t>(len), '\0');
    raw(s.data(), s.size());
    return s;
  }

 private:
  std::ifstream in_;
};

constexpr std::uint64_t kSaneCount = 100'000'000;

std::uint64_t checked_count(Reader& reader, const char* what) {
  const std::uint64_t n = reader.u64();
  if (n > kSaneCount) throw CheckpointError(std::string("implausible ") + what + " in checkpoint");
  return n;
}

}  // namespace

void save_checkpoint(const std::string& path, const GpModel& gp,
                     const std::vector<DirichletPosterior>& posteriors, double alpha, double delta,
                     int candidate, const std::vector<std::string>& labels) {
  if (posteriors.size() != gp.data().size())
    throw std::invalid_argument("save_checkpoint: posterior/source count mismatch");
  Writer w(path);
  w.raw(kMagic, sizeof(kMagic));
  w.f64(alpha);
  w.f64(delta);
  w.i64(candidate);

  w.u64(labels.size());
  for (const auto& label : labels) w.str(label);

  const Eigen::MatrixXd& xs = gp.solutions();
  w.u64(static_cast<std::uint64_t>(xs.rows()));
  w.u64(static_cast<std::uint64_t>(xs.cols()));
  for (Eigen::Index i = 0; i < xs.rows(); ++i)
    for (Eigen::Index j = 0; j < xs.cols(); ++j) w.f64(xs(i, j));

  const GpFit& fit = gp.fit();
  w.f64(fit.params.tau_sq);
  w.u64(static_cast<std::uint64_t>(fit.params.lambda.size()));
  for (Eigen::Index i = 0; i < fit.params.lambda.size(); ++i) w.f64(fit.params.lambda[i]);
  w.u64(static_cast<std::uint64_t>(fit.params.vartheta.size()));
  for (Eigen::Index i = 0; i < fit.params.vartheta.size(); ++i) w.f64(fit.params.vartheta[i]);
  w.u64(static_cast<std::uint64_t>(fit.params.divergence));
  w.u64(fit.params.parametric.size());
  for (const char flag : fit.params.parametric) w.u64(flag ? 1 : 0);
  w.f64(fit.beta0);
  w.f64(fit.log_likelihood);

  w.u64(gp.data().size());
  for (std::size_t l = 0; l < gp.data().size(); ++l) {
    const ObservationSet& set = gp.data()[l];
    w.i64(set.source_index);
    w.u64(set.support.size());
    w.u64(static_cast<std::uint64_t>(set.dim()));
    for (const auto& value : set.support)
      for (Eigen::Index i = 0; i < value.size(); ++i) w.f64(value[i]);
    for (const std::uint64_t count : set.counts) w.u64(count);
    const Eigen::VectorXd& conc = posteriors[l].concentration;
    if (static_cast<std::size_t>(conc.size()) != set.support.size())
      throw std::invalid_argument("save_checkpoint: concentration/support size mismatch");
    for (Eigen::Index i = 0; i < conc.size(); ++i) w.f64(conc[i]);
  }

  w.u64(gp.models().size());
  for (const auto& model : gp.models()) {
    for (const auto& source : model.sources) {
      w.u64(static_cast<std::uint64_t>(source.weights.size()));
      for (Eigen::Index i = 0; i < source.weights.size(); ++i) w.f64(source.weights[i]);
    }
  }

  w.u64(gp.log().size());
  for (const auto& row : gp.log().rows()) {
    w.i64(row.pair.solution);
    w.i64(row.pair.model);
    w.u64(row.stats.count);
    w.f64(row.stats.mean);
    w.f64(row.stats.m2);
  }
  w.finish(path);
}

Checkpoint load_checkpoint(const std::string& path) {
  Reader r(path);
  char magic[8];
  r.raw(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw CheckpointError(path + ": not a posterior checkpoint");

  Checkpoint cp;
  cp.alpha = r.f64();
  cp.delta = r.f64();
  cp.candidate = static_cast<int>(r.i64());

  const std::uint64_t nlabels = checked_count(r, "label count");
  cp.labels.reserve(static_cast<std::size_t>(nlabels));
  for (std::uint64_t i = 0; i < nlabels; ++i) cp.labels.push_back(r.str());

  const std::uint64_t rows = checked_count(r, "solution count");
  const std::uint64_t cols = checked_count(r, "solution dimension");
  Eigen::MatrixXd solutions(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < solutions.rows(); ++i)
    for (Eigen::Index j = 0; j < solutions.cols(); ++j) solutions(i, j) = r.f64();

  GpFit fit;
  fit.params.tau_sq = r.f64();
  fit.params.lambda.resize(static_cast<Eigen::Index>(checked_count(r, "lengthscale count")));
  for (Eigen::Index i = 0; i < fit.params.lambda.size(); ++i) fit.params.lambda[i] = r.f64();
  fit.params.vartheta.resize(static_cast<Eigen::Index>(checked_count(r, "source scale count")));
  for (Eigen::Index i = 0; i < fit.params.vartheta.size(); ++i) fit.params.vartheta[i] = r.f64();
  const std::uint64_t kind = r.u64();
  if (kind > 2) throw CheckpointError("unknown divergence kind in checkpoint");
  fit.params.divergence = static_cast<DivergenceKind>(kind);
  const std::uint64_t nflags = checked_count(r, "parametric flag count");
  fit.params.parametric.resize(static_cast<std::size_t>(nflags));
  for (auto& flag : fit.params.parametric) flag = r.u64() ? 1 : 0;
  fit.beta0 = r.f64();
  fit.log_likelihood = r.f64();

  const std::uint64_t num_sources = checked_count(r, "source count");
  std::vector<ObservationSet> data;
  std::vector<Eigen::VectorXd> concentrations;
  for (std::uint64_t l = 0; l < num_sources; ++l) {
    const int source_index = static_cast<int>(r.i64());
    const std::uint64_t support = checked_count(r, "support size");
    const std::uint64_t dim = checked_count(r, "support dimension");
    std::vector<Eigen::VectorXd> values(static_cast<std::size_t>(support));
    for (auto& value : values) {
      value.resize(static_cast<Eigen::Index>(dim));
      for (Eigen::Index i = 0; i < value.size(); ++i) value[i] = r.f64();
    }
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(support));
    for (auto& count : counts) count = r.u64();
    Eigen::VectorXd conc(static_cast<Eigen::Index>(support));
    for (Eigen::Index i = 0; i < conc.size(); ++i) conc[i] = r.f64();
    try {
      data.push_back(ObservationSet::from_counts(source_index, values, counts));
    } catch (const std::invalid_argument& e) {
      throw CheckpointError(std::string("bad observation block: ") + e.what());
    }
    concentrations.push_back(std::move(conc));
  }

  const std::uint64_t num_models = checked_count(r, "distribution count");
  std::vector<JointInputModel> models(static_cast<std::size_t>(num_models));
  for (auto& model : models) {
    model.sources.resize(static_cast<std::size_t>(num_sources));
    for (std::uint64_t l = 0; l < num_sources; ++l) {
      const std::uint64_t size = checked_count(r, "weight vector size");
      if (size != data[static_cast<std::size_t>(l)].support.size())
        throw CheckpointError("weight vector does not match its support");
      Eigen::VectorXd weights(static_cast<Eigen::Index>(size));
      for (Eigen::Index i = 0; i < weights.size(); ++i) weights[i] = r.f64();
      model.sources[static_cast<std::size_t>(l)].weights = std::move(weights);
    }
  }

  const std::uint64_t num_rows = checked_count(r, "log size");
  SimulationLog log;
  for (std::uint64_t i = 0; i < num_rows; ++i) {
    PairIndex pair;
    pair.solution = static_cast<int>(r.i64());
    pair.model = static_cast<int>(r.i64());
    if (pair.solution < 0 || pair.solution >= static_cast<int>(rows) || pair.model < 0 ||
        pair.model >= static_cast<int>(num_models))
      throw CheckpointError("log row out of range");
    RunningStats stats;
    stats.count = r.u64();
    stats.mean = r.f64();
    stats.m2 = r.f64();
    if (stats.count == 0) throw CheckpointError("log row with no replications");
    log.append_row(pair, stats);
  }
  if (cp.candidate < 0 || cp.candidate >= static_cast<int>(rows))
    throw CheckpointError("candidate index out of range");
  if (!cp.labels.empty() && cp.labels.size() != rows)
    throw CheckpointError("label count does not match solutions");

  for (std::uint64_t l = 0; l < num_sources; ++l)
    cp.posteriors.push_back(
        DirichletPosterior{data[static_cast<std::size_t>(l)], concentrations[static_cast<std::size_t>(l)]});
  try {
    cp.gp = std::make_unique<GpModel>(std::move(solutions), std::move(models), std::move(data),
                                      std::move(fit));
    cp.gp->set_log(std::move(log));
    cp.gp->refresh();
  } catch (const std::exception& e) {
    throw CheckpointError(std::string("cannot rebuild posterior: ") + e.what());
  }
  return cp;
}

}  // namespace srsi
