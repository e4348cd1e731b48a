// Copyright 2026 The gpcert Authors
// Licensed under the Apache License, Version 2.0

#include "gpcert/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace gpcert {

namespace fs = std::filesystem;

namespace {

const std::map<std::string, KernelFamily> kFamilies = {
    {"squared_exponential", KernelFamily::SquaredExponential},
    {"rational_quadratic", KernelFamily::RationalQuadratic},
    {"matern", KernelFamily::Matern},
    {"periodic", KernelFamily::Periodic},
    {"sum", KernelFamily::Sum},
    {"product", KernelFamily::Product},
    {"spectral_stationary", KernelFamily::SpectralStationary},
    {"spectral_nonstationary", KernelFamily::SpectralNonStationary},
};

const std::map<std::string, JobMode> kModes = {
    {"certify", JobMode::Certify},          {"delta", JobMode::Delta},
    {"interpret", JobMode::Interpret},      {"attack", JobMode::Attack},
    {"safety-curve", JobMode::SafetyCurve}, {"gap-curve", JobMode::GapCurve},
};

std::string family_name(KernelFamily f) {
  for (const auto& [name, fam] : kFamilies)
    if (fam == f) return name;
  return "unknown";
}

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

Json norm_to_json(double p) { return std::isinf(p) ? Json("inf") : Json(p); }

double norm_from_json(const Json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "inf") return kInfNorm;
    throw InputError("norm must be \"inf\" or a number >= 1");
  }
  const double p = j.get<double>();
  if (!(p >= 1.0)) throw InputError("norm must be \"inf\" or a number >= 1");
  return p;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  return out;
}

}  // namespace

Json to_json(const Vector& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

Json to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) rows.push_back(to_json(Vector(m.row(i).transpose())));
  return rows;
}

Vector vector_from_json(const Json& j) {
  if (!j.is_array()) throw InputError("expected a numeric array");
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

Matrix matrix_from_json(const Json& j) {
  if (!j.is_array()) throw InputError("expected an array of rows");
  if (j.empty()) return Matrix(0, 0);
  const Index rows = static_cast<Index>(j.size());
  const Index cols = static_cast<Index>(j.at(0).size());
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const Vector r = vector_from_json(j.at(static_cast<size_t>(i)));
    if (r.size() != cols) throw InputError("ragged matrix");
    m.row(i) = r.transpose();
  }
  return m;
}

Json kernel_to_json(const KernelSpec& spec) {
  Json j;
  j["family"] = family_name(spec.family);
  switch (spec.family) {
    case KernelFamily::Sum:
      j["weights"] = spec.weights;
      [[fallthrough]];
    case KernelFamily::Product:
      j["children"] = Json::array();
      for (const KernelSpec& c : spec.children) j["children"].push_back(kernel_to_json(c));
      return j;
    case KernelFamily::SpectralStationary:
    case KernelFamily::SpectralNonStationary:
      j["components"] = Json::array();
      for (const SpectralComponent& c : spec.components) {
        Json cj{{"variance", c.variance}, {"theta", to_json(c.theta)}, {"frequency", to_json(c.frequency)}};
        if (spec.family == KernelFamily::SpectralNonStationary) cj["frequency2"] = to_json(c.frequency2);
        j["components"].push_back(cj);
      }
      return j;
    default:
      break;
  }
  j["variance"] = spec.variance;
  j["theta"] = to_json(spec.theta);
  if (spec.family == KernelFamily::RationalQuadratic) j["alpha"] = spec.alpha;
  if (spec.family == KernelFamily::Matern) j["order"] = spec.order;
  if (spec.family == KernelFamily::Periodic) j["period"] = to_json(spec.period);
  return j;
}

KernelSpec kernel_from_json(const Json& j) {
  try {
    const auto it = kFamilies.find(j.at("family").get<std::string>());
    if (it == kFamilies.end()) throw InputError("unknown kernel family " + j.at("family").dump());
    KernelSpec spec;
    switch (it->second) {
      case KernelFamily::SquaredExponential:
        spec = KernelSpec::squared_exponential(j.at("variance").get<double>(), vector_from_json(j.at("theta")));
        break;
      case KernelFamily::RationalQuadratic:
        spec = KernelSpec::rational_quadratic(j.at("variance").get<double>(), vector_from_json(j.at("theta")),
                                              j.at("alpha").get<double>());
        break;
      case KernelFamily::Matern:
        spec = KernelSpec::matern(j.at("variance").get<double>(), vector_from_json(j.at("theta")),
                                  j.at("order").get<int>());
        break;
      case KernelFamily::Periodic:
        spec = KernelSpec::periodic(j.at("variance").get<double>(), vector_from_json(j.at("theta")),
                                    vector_from_json(j.at("period")));
        break;
      case KernelFamily::Sum:
      case KernelFamily::Product: {
        std::vector<KernelSpec> children;
        for (const Json& c : j.at("children")) children.push_back(kernel_from_json(c));
        spec = it->second == KernelFamily::Sum
                   ? KernelSpec::sum(std::move(children), j.at("weights").get<std::vector<double>>())
                   : KernelSpec::product(std::move(children));
        break;
      }
      case KernelFamily::SpectralStationary:
      case KernelFamily::SpectralNonStationary: {
        std::vector<SpectralComponent> comps;
        for (const Json& c : j.at("components")) {
          SpectralComponent sc;
          sc.variance = c.at("variance").get<double>();
          sc.theta = vector_from_json(c.at("theta"));
          sc.frequency = vector_from_json(c.at("frequency"));
          if (c.contains("frequency2")) sc.frequency2 = vector_from_json(c.at("frequency2"));
          comps.push_back(std::move(sc));
        }
        spec = it->second == KernelFamily::SpectralStationary ? KernelSpec::spectral_stationary(std::move(comps))
                                                              : KernelSpec::spectral_nonstationary(std::move(comps));
        break;
      }
    }
    spec.validate();
    return spec;
  } catch (const InputError&) {
    throw;
  } catch (const std::exception& e) {
    throw InputError(std::string("bad kernel: ") + e.what());
  }
}

Vector model_output(const GpModel& model, const Vector& x) {
  if (model.task() != Task::Regression) return model.predict_class_prob(x);
  return model.posterior_at(x).mean;
}

std::vector<ReferencePrediction> reference_predictions(const GpModel& model, const std::vector<Vector>& points) {
  std::vector<ReferencePrediction> out;
  for (const Vector& x : points) out.push_back({x, model_output(model, x)});
  return out;
}

Json model_to_json(const GpModel& model, const std::vector<ReferencePrediction>& references) {
  Json j;
  j["format"] = "gpcert-model";
  j["version"] = 1;
  switch (model.task()) {
    case Task::Regression:
      j["task"] = "regression";
      break;
    case Task::BinaryClassification:
      j["task"] = "binary";
      break;
    case Task::MultiClass:
      j["task"] = "multiclass";
      break;
  }
  switch (model.link().kind) {
    case Link::Kind::Probit:
      j["link"] = "probit";
      break;
    case Link::Kind::Logistic:
      j["link"] = "logistic";
      break;
    case Link::Kind::Softmax:
      j["link"] = "softmax";
      break;
  }
  j["lambda"] = model.link().lambda;
  j["noise"] = model.noise();
  if (model.kernels().size() == 1) {
    j["kernel"] = kernel_to_json(model.kernels().front());
  } else {
    j["kernels"] = Json::array();
    for (const KernelSpec& k : model.kernels()) j["kernels"].push_back(kernel_to_json(k));
  }
  j["X"] = to_json(model.inputs());
  j["t"] = model.outputs() == 1 ? to_json(Vector(model.weights().col(0))) : to_json(model.weights());
  j["S"] = to_json(model.posterior_matrix());
  j["reference_predictions"] = Json::array();
  for (const ReferencePrediction& r : references)
    j["reference_predictions"].push_back({{"x", to_json(r.x)}, {"value", to_json(r.value)}});
  return j;
}

GpModel model_from_json(const Json& j, double tolerance) {
  GpModel model;
  try {
    if (j.value("format", std::string("gpcert-model")) != "gpcert-model") throw InputError("not a gpcert model file");
    if (j.value("version", 1) != 1) throw InputError("unsupported model file version");
    const std::string task_name = j.at("task").get<std::string>();
    Task task;
    if (task_name == "regression") {
      task = Task::Regression;
    } else if (task_name == "binary") {
      task = Task::BinaryClassification;
    } else if (task_name == "multiclass") {
      task = Task::MultiClass;
    } else {
      throw InputError("unknown task " + task_name);
    }
    Link link;
    const std::string link_name = get_or<std::string>(j, "link", task == Task::MultiClass ? "softmax" : "probit");
    if (link_name == "probit") {
      link.kind = Link::Kind::Probit;
    } else if (link_name == "logistic") {
      link.kind = Link::Kind::Logistic;
    } else if (link_name == "softmax") {
      link.kind = Link::Kind::Softmax;
    } else {
      throw InputError("unknown link " + link_name);
    }
    link.lambda = get_or<double>(j, "lambda", 1.0);
    if (!(link.lambda > 0.0)) throw InputError("lambda must be positive");

    std::vector<KernelSpec> kernels;
    if (j.contains("kernels")) {
      for (const Json& k : j.at("kernels")) kernels.push_back(kernel_from_json(k));
    } else {
      kernels.push_back(kernel_from_json(j.at("kernel")));
    }
    const Matrix inputs = matrix_from_json(j.at("X"));
    const Json& tj = j.at("t");
    Matrix weights;
    if (!tj.empty() && tj.at(0).is_array()) {
      weights = matrix_from_json(tj);
    } else {
      weights = vector_from_json(tj);
    }
    const Matrix posterior = matrix_from_json(j.at("S"));
    model = GpModel(task, std::move(kernels), inputs, weights, posterior, link, get_or<double>(j, "noise", 0.0));
  } catch (const InputError&) {
    throw;
  } catch (const std::exception& e) {
    throw InputError(std::string("bad model: ") + e.what());
  }

  if (j.contains("reference_predictions")) {
    size_t idx = 0;
    for (const Json& r : j.at("reference_predictions")) {
      const Vector x = vector_from_json(r.at("x"));
      const Vector want = vector_from_json(r.at("value"));
      if (x.size() != model.dim()) throw InputError("reference point has the wrong dimension");
      const Vector got = model_output(model, x);
      if (got.size() != want.size() || (got - want).lpNorm<Eigen::Infinity>() > tolerance) {
        std::ostringstream msg;
        msg << "reference prediction " << idx << " not reproduced";
        throw InputError(msg.str());
      }
      ++idx;
    }
  }
  return model;
}

Json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

GpModel load_model(const fs::path& path) { return model_from_json(read_json(path)); }

void save_model(const fs::path& path, const GpModel& model, const std::vector<ReferencePrediction>& references) {
  write_json(path, model_to_json(model, references));
}

Table read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw InputError(path.string() + ": empty file");
  t.columns = split_line(line);
  std::vector<std::vector<double>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_line(line);
    if (cells.size() != t.columns.size())
      throw InputError(path.string() + ":" + std::to_string(lineno) + ": wrong number of fields");
    std::vector<double> row;
    for (const std::string& c : cells) {
      size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(c, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != c.size() || c.empty())
        throw InputError(path.string() + ":" + std::to_string(lineno) + ": not a number: " + c);
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  t.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(t.columns.size()));
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t k = 0; k < rows[i].size(); ++k) t.values(static_cast<Index>(i), static_cast<Index>(k)) = rows[i][k];
  return t;
}

void write_csv(const fs::path& path, const Table& table) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  for (size_t k = 0; k < table.columns.size(); ++k) out << (k ? "," : "") << table.columns[k];
  out << '\n' << std::setprecision(17);
  for (Index i = 0; i < table.values.rows(); ++i) {
    for (Index k = 0; k < table.values.cols(); ++k) out << (k ? "," : "") << table.values(i, k);
    out << '\n';
  }
}

Dataset read_dataset(const fs::path& path) {
  const Table t = read_csv(path);
  if (t.columns.empty() || (t.columns.back() != "label" && t.columns.back() != "y"))
    throw InputError(path.string() + ": last column must be label or y");
  if (t.columns.size() < 2) throw InputError(path.string() + ": no input columns");
  const Index d = static_cast<Index>(t.columns.size()) - 1;
  return {t.values.leftCols(d), t.values.col(d)};
}

void write_dataset(const fs::path& path, const Dataset& data) {
  Table t;
  for (Index j = 0; j < data.inputs.cols(); ++j) t.columns.push_back("x" + std::to_string(j + 1));
  t.columns.push_back("label");
  t.values.resize(data.inputs.rows(), data.inputs.cols() + 1);
  t.values << data.inputs, data.labels;
  write_csv(path, t);
}

void write_trace_csv(const fs::path& path, const std::vector<TraceRecord>& trace) {
  Table t{{"iteration", "lower", "upper", "regions"}, Matrix(static_cast<Index>(trace.size()), 4)};
  for (size_t i = 0; i < trace.size(); ++i)
    t.values.row(static_cast<Index>(i)) << trace[i].iteration, trace[i].lower, trace[i].upper,
        static_cast<double>(trace[i].regions);
  write_csv(path, t);
}

std::string to_string(JobMode mode) {
  for (const auto& [name, m] : kModes)
    if (m == mode) return name;
  return "certify";
}

JobSpec job_from_json(const Json& j, const fs::path& base) {
  auto resolve = [&](const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
  };
  JobSpec job;
  try {
    job.model = resolve(j.at("model").get<std::string>());
    if (!fs::exists(job.model)) throw InputError("model file not found: " + job.model.string());
    if (j.contains("mode")) {
      const auto it = kModes.find(j.at("mode").get<std::string>());
      if (it == kModes.end()) throw InputError("unknown mode " + j.at("mode").dump());
      job.mode = it->second;
    }
    if (j.contains("points")) {
      for (const Json& p : j.at("points")) job.points.push_back(vector_from_json(p));
    }
    if (j.contains("dataset")) {
      const fs::path data = resolve(j.at("dataset").get<std::string>());
      if (!fs::exists(data)) throw InputError("dataset not found: " + data.string());
      const Dataset ds = read_dataset(data);
      std::vector<Index> indices;
      if (j.contains("indices")) {
        indices = j.at("indices").get<std::vector<Index>>();
      } else {
        for (Index i = 0; i < ds.inputs.rows(); ++i) indices.push_back(i);
      }
      for (Index i : indices) {
        if (i < 0 || i >= ds.inputs.rows()) throw InputError("dataset index out of range");
        job.points.push_back(ds.inputs.row(i).transpose());
      }
    }
    if (j.contains("gammas")) job.gammas = j.at("gammas").get<std::vector<double>>();
    if (j.contains("gamma")) job.gammas.push_back(j.at("gamma").get<double>());
    job.epsilon = get_or<double>(j, "epsilon", job.epsilon);
    job.cells = get_or<Index>(j, "cells", job.cells);
    job.features = get_or<std::vector<Index>>(j, "features", {});
    job.budgets = get_or<std::vector<Index>>(j, "budgets", {});
    job.seed = get_or<std::uint64_t>(j, "seed", job.seed);
    job.max_iterations = get_or<int>(j, "max_iterations", job.max_iterations);
    job.max_seconds = get_or<double>(j, "max_seconds", job.max_seconds);
    const std::string split = get_or<std::string>(j, "split", "random");
    if (split == "random") {
      job.split = SplitRule::Random;
    } else if (split == "widest") {
      job.split = SplitRule::WidestDimension;
    } else {
      throw InputError("unknown split rule " + split);
    }
    if (j.contains("norm")) job.norm = norm_from_json(j.at("norm"));
    job.delta = get_or<double>(j, "delta", job.delta);
    job.samples = get_or<Index>(j, "samples", job.samples);
    job.attack_steps = get_or<int>(j, "attack_steps", job.attack_steps);
  } catch (const InputError&) {
    throw;
  } catch (const std::exception& e) {
    throw InputError(std::string("bad job: ") + e.what());
  }
  for (double g : job.gammas)
    if (!(g > 0.0)) throw InputError("gamma must be positive");
  if (!(job.epsilon > 0.0)) throw InputError("epsilon must be positive");
  if (!(job.delta >= 0.0)) throw InputError("delta must be nonnegative");
  if (job.max_iterations <= 0 || !(job.max_seconds > 0.0)) throw InputError("budgets must be positive");
  return job;
}

Json job_to_json(const JobSpec& job) {
  Json j;
  j["model"] = job.model.string();
  j["mode"] = to_string(job.mode);
  j["points"] = Json::array();
  for (const Vector& p : job.points) j["points"].push_back(to_json(p));
  j["gammas"] = job.gammas;
  j["epsilon"] = job.epsilon;
  j["cells"] = job.cells;
  j["features"] = job.features;
  j["budgets"] = job.budgets;
  j["seed"] = job.seed;
  j["max_iterations"] = job.max_iterations;
  j["max_seconds"] = job.max_seconds;
  j["split"] = job.split == SplitRule::Random ? "random" : "widest";
  j["norm"] = norm_to_json(job.norm);
  j["delta"] = job.delta;
  j["samples"] = job.samples;
  j["attack_steps"] = job.attack_steps;
  return j;
}

BnbConfig bnb_config(const JobSpec& job, int workers) {
  BnbConfig c;
  c.epsilon = job.epsilon;
  c.max_iterations = job.max_iterations;
  c.max_seconds = job.max_seconds;
  c.split = job.split;
  c.partition_cells = job.cells;
  c.seed = job.seed;
  c.workers = std::max(workers, 1);
  return c;
}

Json verdict_to_json(const SafetyVerdict& v) {
  Json j;
  j["verdict"] = to_string(v.verdict);
  j["predicted"] = v.predicted;
  j["pi_star"] = to_json(v.pi_star);
  j["bound_lower"] = to_json(v.bound_lower);
  j["bound_upper"] = to_json(v.bound_upper);
  j["witness"] = v.witness.size() > 0 ? to_json(v.witness) : Json(nullptr);
  j["gap"] = v.gap;
  j["gamma"] = v.gamma;
  j["norm"] = norm_to_json(v.norm);
  j["bounding_box"] = v.bounding_box;
  j["iterations"] = v.iterations;
  j["seconds"] = v.seconds;
  return j;
}

}  // namespace gpcert
