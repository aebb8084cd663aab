#include "srsi/input_model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace srsi {

namespace {

std::vector<std::uint64_t> bit_key(const Eigen::VectorXd& v) {
  std::vector<std::uint64_t> key(static_cast<std::size_t>(v.size()));
  std::memcpy(key.data(), v.data(), sizeof(double) * key.size());
  return key;
}

}  // namespace

ObservationSet ObservationSet::from_raw(int source_index,
                                        const std::vector<Eigen::VectorXd>& observations) {
  if (observations.empty()) throw std::invalid_argument("observation set: no observations");
  ObservationSet out;
  out.source_index = source_index;
  const Eigen::Index dim = observations.front().size();
  std::map<std::vector<std::uint64_t>, std::size_t> seen;
  for (const auto& obs : observations) {
    if (obs.size() != dim) throw std::invalid_argument("observation set: mixed dimensions");
    auto [it, inserted] = seen.try_emplace(bit_key(obs), out.support.size());
    if (inserted) {
      out.support.push_back(obs);
      out.counts.push_back(1);
    } else {
      ++out.counts[it->second];
    }
    ++out.total;
  }
  return out;
}

ObservationSet ObservationSet::from_counts(int source_index,
                                           const std::vector<Eigen::VectorXd>& values,
                                           const std::vector<std::uint64_t>& counts) {
  if (values.size() != counts.size())
    throw std::invalid_argument("observation set: values/counts length mismatch");
  if (values.empty()) throw std::invalid_argument("observation set: no observations");
  ObservationSet out;
  out.source_index = source_index;
  const Eigen::Index dim = values.front().size();
  std::map<std::vector<std::uint64_t>, std::size_t> seen;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i].size() != dim) throw std::invalid_argument("observation set: mixed dimensions");
    if (counts[i] == 0) continue;
    auto [it, inserted] = seen.try_emplace(bit_key(values[i]), out.support.size());
    if (inserted) {
      out.support.push_back(values[i]);
      out.counts.push_back(counts[i]);
    } else {
      out.counts[it->second] += counts[i];
    }
    out.total += counts[i];
  }
  if (out.total == 0) throw std::invalid_argument("observation set: all counts are zero");
  return out;
}

DirichletPosterior build_posterior(const ObservationSet& data, double kappa) {
  Eigen::VectorXd k = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(data.support_size()), kappa);
  return build_posterior(data, k);
}

DirichletPosterior build_posterior(const ObservationSet& data, const Eigen::VectorXd& kappa) {
  if (data.support.empty()) throw std::invalid_argument("build_posterior: empty observation set");
  if (kappa.size() != static_cast<Eigen::Index>(data.support_size()))
    throw std::invalid_argument("build_posterior: kappa length mismatch");
  if ((kappa.array() <= 0.0).any())
    throw std::invalid_argument("build_posterior: kappa must be positive");
  DirichletPosterior post;
  post.data = data;
  post.concentration.resize(kappa.size());
  for (Eigen::Index j = 0; j < kappa.size(); ++j)
    post.concentration[j] = static_cast<double>(data.counts[static_cast<std::size_t>(j)]) + kappa[j];
  return post;
}

ProbabilitySimplex map_simplex(const DirichletPosterior& posterior) {
  const Eigen::VectorXd shifted = posterior.concentration.array() - 1.0;
  if ((shifted.array() < 0.0).any())
    throw std::invalid_argument("map_simplex: mode undefined for concentrations below 1");
  const double total = shifted.sum();
  if (!(total > 0.0)) throw std::invalid_argument("map_simplex: degenerate concentrations");
  return ProbabilitySimplex{shifted / total};
}

ProbabilitySimplex sample_simplex(const DirichletPosterior& posterior, RandomStream& rng) {
  Eigen::VectorXd g(posterior.concentration.size());
  for (Eigen::Index j = 0; j < g.size(); ++j) g[j] = rng.gamma(posterior.concentration[j]);
  const double total = g.sum();
  if (!(total > 0.0)) throw std::runtime_error("sample_simplex: degenerate gamma draws");
  return ProbabilitySimplex{g / total};
}

std::vector<JointInputModel> sample_joint(const std::vector<DirichletPosterior>& posteriors,
                                          int count, RandomStream& rng) {
  if (count <= 0) throw std::invalid_argument("sample_joint: count must be positive");
  std::vector<JointInputModel> models(static_cast<std::size_t>(count));
  for (auto& model : models) {
    model.sources.reserve(posteriors.size());
    for (const auto& post : posteriors) model.sources.push_back(sample_simplex(post, rng));
  }
  return models;
}

Eigen::VectorXd simplex_mean(const ProbabilitySimplex& simplex, const ObservationSet& data) {
  if (simplex.weights.size() != static_cast<Eigen::Index>(data.support_size()))
    throw std::invalid_argument("simplex_mean: weight/support length mismatch");
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(data.dim());
  for (std::size_t j = 0; j < data.support.size(); ++j)
    mean += simplex.weights[static_cast<Eigen::Index>(j)] * data.support[j];
  return mean;
}

DivergenceKind divergence_kind_from_string(const std::string& name) {
  if (name == "total_variation" || name == "tv") return DivergenceKind::total_variation;
  if (name == "squared_hellinger" || name == "hellinger") return DivergenceKind::squared_hellinger;
  if (name == "jensen_shannon" || name == "js") return DivergenceKind::jensen_shannon;
  throw std::invalid_argument("unknown divergence kind: " + name);
}

std::string to_string(DivergenceKind kind) {
  switch (kind) {
    case DivergenceKind::total_variation: return "total_variation";
    case DivergenceKind::squared_hellinger: return "squared_hellinger";
    case DivergenceKind::jensen_shannon: return "jensen_shannon";
  }
  throw std::logic_error("unreachable");
}

double divergence(const ProbabilitySimplex& p, const ProbabilitySimplex& q, DivergenceKind kind) {
  const Eigen::VectorXd& a = p.weights;
  const Eigen::VectorXd& b = q.weights;
  if (a.size() != b.size()) throw std::invalid_argument("divergence: weight vectors differ in length");
  double sum = 0.0;
  switch (kind) {
    case DivergenceKind::total_variation:
      for (Eigen::Index j = 0; j < a.size(); ++j) sum += 0.5 * std::abs(a[j] - b[j]);
      return sum;
    case DivergenceKind::squared_hellinger:
      for (Eigen::Index j = 0; j < a.size(); ++j) {
        const double d = std::sqrt(a[j]) - std::sqrt(b[j]);
        sum += 0.25 * d * d;
      }
      return sum;
    case DivergenceKind::jensen_shannon:
      // 0 * log(...) := 0 by branching, never by evaluating log at 0.
      for (Eigen::Index j = 0; j < a.size(); ++j) {
        const double m = a[j] + b[j];
        if (a[j] > 0.0) sum += 0.5 * a[j] * std::log(2.0 * a[j] / m);
        if (b[j] > 0.0) sum += 0.5 * b[j] * std::log(2.0 * b[j] / m);
      }
      return sum;
  }
  throw std::logic_error("unreachable");
}

namespace {

Eigen::VectorXd parse_fields(const std::vector<double>& fields) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(fields.size()));
  for (std::size_t i = 0; i < fields.size(); ++i) v[static_cast<Eigen::Index>(i)] = fields[i];
  return v;
}

bool split_line(const std::string& line, std::vector<double>& out, const std::string& path) {
  out.clear();
  std::string token;
  std::stringstream ss(line);
  bool any = false;
  while (std::getline(ss, token, ',')) {
    const auto first = token.find_first_not_of(" \t\r");
    if (first == std::string::npos) {
      if (any) throw std::invalid_argument(path + ": empty field in line '" + line + "'");
      continue;
    }
    const auto last = token.find_last_not_of(" \t\r");
    token = token.substr(first, last - first + 1);
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(token, &used);
    } catch (const std::exception&) {
      throw std::invalid_argument(path + ": cannot parse '" + token + "'");
    }
    if (used != token.size()) throw std::invalid_argument(path + ": cannot parse '" + token + "'");
    out.push_back(value);
    any = true;
  }
  return any;
}

}  // namespace

std::vector<Eigen::VectorXd> read_observations(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open data file: " + path);
  std::vector<Eigen::VectorXd> observations;
  std::string line;
  std::vector<double> fields;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (!split_line(line, fields, path)) continue;
    observations.push_back(parse_fields(fields));
    if (observations.back().size() != observations.front().size())
      throw std::invalid_argument(path + ": mixed dimensions");
  }
  if (observations.empty()) throw std::invalid_argument(path + ": no observations");
  return observations;
}

void read_counts(const std::string& path, std::vector<Eigen::VectorXd>& values,
                 std::vector<std::uint64_t>& counts) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open data file: " + path);
  values.clear();
  counts.clear();
  std::string line;
  std::vector<double> fields;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (!split_line(line, fields, path)) continue;
    if (fields.size() < 2) throw std::invalid_argument(path + ": counts line needs 'value,count'");
    const double raw = fields.back();
    if (raw < 0.0 || raw != std::floor(raw))
      throw std::invalid_argument(path + ": count must be a nonnegative integer");
    fields.pop_back();
    values.push_back(parse_fields(fields));
    counts.push_back(static_cast<std::uint64_t>(raw));
    if (values.back().size() != values.front().size())
      throw std::invalid_argument(path + ": mixed dimensions");
  }
  if (values.empty()) throw std::invalid_argument(path + ": no observations");
}

}  // namespace srsi
