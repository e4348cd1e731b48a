// Copyright 2026 The gpcert Authors
// Licensed under the Apache License, Version 2.0
//
// Command-line front end. Exit status: 0 on success, 1 on input or I/O
// errors, 2 when any verdict is left undecided by the search budget.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gpcert/io.hpp"
#include "gpcert/robustness.hpp"
#include "gpcert/synthetic.hpp"

namespace fs = std::filesystem;
using namespace gpcert;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitUnknown = 2;

struct Common {
  std::string model;
  std::string job;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<double> epsilon;
  std::optional<double> gamma;
  std::optional<int> workers;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--model", c.model, "model JSON (overrides the job's model)");
  cmd->add_option("--job", c.job, "job JSON");
  cmd->add_option("--out", c.out, "output path");
  cmd->add_option("--seed", c.seed, "random seed");
  cmd->add_option("--epsilon", c.epsilon, "branch-and-bound tolerance");
  cmd->add_option("--gamma", c.gamma, "radius (replaces the job's list)");
  cmd->add_option("--workers", c.workers, "worker threads (default: GPCERT_WORKERS or 1)");
}

int resolve_workers(const Common& c) {
  if (c.workers) return std::max(*c.workers, 1);
  if (const char* env = std::getenv("GPCERT_WORKERS")) {
    try {
      return std::max(std::stoi(env), 1);
    } catch (const std::exception&) {
      throw InputError("GPCERT_WORKERS is not an integer");
    }
  }
  return 1;
}

fs::path require(const std::string& value, const char* what) {
  if (value.empty()) throw InputError(std::string("missing ") + what);
  return value;
}

JobSpec load_job(const Common& c) {
  JobSpec job;
  if (!c.job.empty()) {
    const fs::path path = c.job;
    Json j = read_json(path);
    if (!c.model.empty()) j["model"] = fs::absolute(c.model).string();
    job = job_from_json(j, path.parent_path());
  } else {
    job.model = require(c.model, "--model or --job");
    if (!fs::exists(job.model)) throw InputError("model file not found: " + job.model.string());
  }
  if (c.seed) job.seed = *c.seed;
  if (c.epsilon) job.epsilon = *c.epsilon;
  if (c.gamma) job.gammas = {*c.gamma};
  if (!(job.epsilon > 0.0)) throw InputError("epsilon must be positive");
  for (double g : job.gammas)
    if (!(g > 0.0)) throw InputError("gamma must be positive");
  return job;
}

fs::path csv_path(const fs::path& out) {
  fs::path p = out;
  p.replace_extension(".csv");
  return p;
}

// Rows for every (point, gamma) pair, in input order.
struct Row {
  Index point;
  double gamma;
};

std::vector<Row> rows_of(const JobSpec& job) {
  std::vector<Row> rows;
  for (Index p = 0; p < static_cast<Index>(job.points.size()); ++p)
    for (double g : job.gammas) rows.push_back({p, g});
  return rows;
}

void check_points(const JobSpec& job, const GpModel& model) {
  for (const Vector& x : job.points)
    if (x.size() != model.dim()) throw InputError("job point dimension does not match the model");
}

int cmd_gen(Index n_train, Index n_test, double shift, const Common& c) {
  const fs::path dir = require(c.out, "--out");
  fs::create_directories(dir);
  const SyntheticSplit s = make_synthetic2d(n_train, n_test, c.seed.value_or(0), shift);
  write_dataset(dir / "train.csv", s.train);
  write_dataset(dir / "test.csv", s.test);
  std::cout << "wrote " << (dir / "train.csv").string() << " and " << (dir / "test.csv").string() << '\n';
  return kExitOk;
}

struct TrainOptions {
  std::string data;
  std::string holdout;
  std::string task = "binary";
  std::string link = "probit";
  std::string kernel;
  double variance = 1.0;
  double theta = 0.5;
  double noise = 0.1;
  double lambda = 1.0;
};

int cmd_train(const TrainOptions& t, const Common& c) {
  const Dataset data = read_dataset(require(t.data, "--data"));
  const fs::path out = require(c.out, "--out");
  const Index d = data.inputs.cols();
  const KernelSpec kernel = t.kernel.empty() ? KernelSpec::squared_exponential(t.variance, Vector::Constant(d, t.theta))
                                             : kernel_from_json(read_json(t.kernel));
  GpModel model;
  try {
    if (t.task == "regression") {
      model = fit_regression(data.inputs, data.labels, kernel, t.noise);
    } else if (t.task == "binary") {
      Link link;
      if (t.link == "probit") {
        link.kind = Link::Kind::Probit;
      } else if (t.link == "logistic") {
        link.kind = Link::Kind::Logistic;
      } else {
        throw InputError("unknown link " + t.link);
      }
      link.lambda = t.lambda;
      const bool signed_labels = (data.labels.array().abs() == 1.0).all();
      model = fit_laplace_binary(data.inputs, signed_labels ? data.labels : to_signed_labels(data.labels), kernel, link);
    } else {
      throw InputError("unknown task " + t.task);
    }
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }

  // Reference points: the first rows of a held-out file, else seeded draws
  // from the training bounding box.
  constexpr Index kReferences = 10;
  std::vector<Vector> points;
  if (!t.holdout.empty()) {
    const Dataset held = read_dataset(t.holdout);
    if (held.inputs.cols() != d) throw InputError("held-out data dimension mismatch");
    for (Index i = 0; i < std::min(kReferences, held.inputs.rows()); ++i) points.push_back(held.inputs.row(i).transpose());
  } else {
    std::mt19937_64 rng(c.seed.value_or(0));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const Vector lo = data.inputs.colwise().minCoeff().transpose();
    const Vector hi = data.inputs.colwise().maxCoeff().transpose();
    for (Index i = 0; i < kReferences; ++i) {
      Vector x(d);
      for (Index j = 0; j < d; ++j) x(j) = lo(j) + unit(rng) * (hi(j) - lo(j));
      points.push_back(x);
    }
  }
  save_model(out, model, reference_predictions(model, points));
  std::cout << "wrote " << out.string() << '\n';
  return kExitOk;
}

int cmd_certify(const Common& c) {
  const JobSpec job = load_job(c);
  const GpModel model = load_model(job.model);
  check_points(job, model);
  const fs::path out = require(c.out, "--out");
  const int workers = resolve_workers(c);
  BnbConfig config = bnb_config(job, 1);
  Json report{{"command", "certify"}, {"job", job_to_json(job)}, {"results", Json::array()}};
  int status = kExitOk;

  if (job.mode == JobMode::SafetyCurve || job.mode == JobMode::GapCurve) {
    if (model.task() == Task::Regression) throw InputError("curves need a classifier");
    Table table;
    std::vector<Json> results(job.points.size());
    std::vector<Matrix> blocks(job.points.size());
    parallel_for(static_cast<Index>(job.points.size()), workers, [&](Index p) {
      const Vector& x = job.points[static_cast<size_t>(p)];
      const Index pred = model.predict_class(x);
      Json r{{"point", p}, {"predicted", pred}};
      if (job.mode == JobMode::SafetyCurve) {
        const auto curve = safety_curve(model, x, job.gammas, config, pred);
        Matrix& b = blocks[static_cast<size_t>(p)];
        b.resize(static_cast<Index>(curve.size()), 9);
        for (size_t i = 0; i < curve.size(); ++i) {
          const SafetyPoint& s = curve[i];
          b.row(static_cast<Index>(i)) << static_cast<double>(p), s.gamma, s.min_lower, s.min_upper, s.max_lower,
              s.max_upper, s.raw_min_lower, s.attack, s.converged ? 1.0 : 0.0;
          r["curve"].push_back({{"gamma", s.gamma},
                                {"min_lower", s.min_lower},
                                {"min_upper", s.min_upper},
                                {"max_lower", s.max_lower},
                                {"max_upper", s.max_upper},
                                {"attack", s.attack},
                                {"converged", s.converged}});
        }
      } else {
        const double gamma = job.gammas.empty() ? 0.1 : job.gammas.front();
        std::vector<Index> features = job.features;
        if (features.empty())
          for (Index j = 0; j < model.dim(); ++j) features.push_back(j);
        std::vector<Index> budgets = job.budgets;
        if (budgets.empty())
          for (Index b = 0; b <= static_cast<Index>(features.size()); ++b) budgets.push_back(b);
        const auto curve = adversarial_gap_curve(model, x, features, gamma, budgets, config);
        Matrix& b = blocks[static_cast<size_t>(p)];
        b.resize(static_cast<Index>(curve.size()), 6);
        for (size_t i = 0; i < curve.size(); ++i) {
          const GapPoint& g = curve[i];
          b.row(static_cast<Index>(i)) << static_cast<double>(p), static_cast<double>(g.budget), g.lower, g.upper,
              g.raw_lower, g.converged ? 1.0 : 0.0;
          r["curve"].push_back(
              {{"budget", g.budget}, {"lower", g.lower}, {"upper", g.upper}, {"converged", g.converged}});
        }
      }
      results[static_cast<size_t>(p)] = std::move(r);
    });
    table.columns = job.mode == JobMode::SafetyCurve
                        ? std::vector<std::string>{"point", "gamma", "min_lower", "min_upper", "max_lower",
                                                   "max_upper", "raw_min_lower", "attack", "converged"}
                        : std::vector<std::string>{"point", "budget", "lower", "upper", "raw_lower", "converged"};
    Index total = 0;
    for (const Matrix& b : blocks) total += b.rows();
    table.values.resize(total, static_cast<Index>(table.columns.size()));
    Index at = 0;
    for (const Matrix& b : blocks) {
      table.values.middleRows(at, b.rows()) = b;
      at += b.rows();
    }
    for (Json& r : results) report["results"].push_back(std::move(r));
    write_csv(csv_path(out), table);
  } else {
    const auto rows = rows_of(job);
    std::vector<SafetyVerdict> verdicts(rows.size());
    parallel_for(static_cast<Index>(rows.size()), workers, [&](Index k) {
      const Row& row = rows[static_cast<size_t>(k)];
      const Vector& x = job.points[static_cast<size_t>(row.point)];
      verdicts[static_cast<size_t>(k)] = model.task() == Task::Regression
                                             ? certify_regression(model, x, row.gamma, job.delta, config, job.norm)
                                             : certify_classification(model, x, row.gamma, config, job.norm);
    });
    Table table{{"point", "gamma", "verdict", "predicted", "gap", "iterations", "seconds"},
                Matrix(static_cast<Index>(rows.size()), 7)};
    for (size_t k = 0; k < rows.size(); ++k) {
      const SafetyVerdict& v = verdicts[k];
      Json r = verdict_to_json(v);
      r["point"] = rows[k].point;
      report["results"].push_back(std::move(r));
      table.values.row(static_cast<Index>(k)) << static_cast<double>(rows[k].point), rows[k].gamma,
          static_cast<double>(static_cast<int>(v.verdict)), static_cast<double>(v.predicted), v.gap,
          static_cast<double>(v.iterations), v.seconds;
      if (v.verdict == Verdict::Unknown) status = kExitUnknown;
    }
    write_csv(csv_path(out), table);
  }
  write_json(out, report);
  return status;
}

int cmd_delta(const Common& c) {
  const JobSpec job = load_job(c);
  const GpModel model = load_model(job.model);
  if (model.task() != Task::BinaryClassification) throw InputError("delta needs a binary classifier");
  check_points(job, model);
  const fs::path out = require(c.out, "--out");
  const BnbConfig config = bnb_config(job, 1);
  const auto rows = rows_of(job);
  std::vector<Estimate> est(rows.size());
  parallel_for(static_cast<Index>(rows.size()), resolve_workers(c), [&](Index k) {
    const Row& row = rows[static_cast<size_t>(k)];
    est[static_cast<size_t>(k)] = delta_metric(model, job.points[static_cast<size_t>(row.point)], row.gamma, config);
  });
  Json report{{"command", "delta"}, {"job", job_to_json(job)}, {"results", Json::array()}};
  Table table{{"point", "gamma", "delta", "lower", "upper", "converged"}, Matrix(static_cast<Index>(rows.size()), 6)};
  int status = kExitOk;
  for (size_t k = 0; k < rows.size(); ++k) {
    const Estimate& e = est[k];
    report["results"].push_back({{"point", rows[k].point},
                                 {"gamma", rows[k].gamma},
                                 {"delta", e.value},
                                 {"lower", e.lower},
                                 {"upper", e.upper},
                                 {"converged", e.converged}});
    table.values.row(static_cast<Index>(k)) << static_cast<double>(rows[k].point), rows[k].gamma, e.value, e.lower,
        e.upper, e.converged ? 1.0 : 0.0;
    if (!e.converged) status = kExitUnknown;
  }
  write_csv(csv_path(out), table);
  write_json(out, report);
  return status;
}

int cmd_interpret(const Common& c) {
  JobSpec job = load_job(c);
  const GpModel model = load_model(job.model);
  if (model.task() != Task::BinaryClassification) throw InputError("interpret needs a binary classifier");
  check_points(job, model);
  const fs::path out = require(c.out, "--out");
  // Uniform seeded subsample when the job asks for fewer points.
  std::vector<Index> chosen(job.points.size());
  for (size_t i = 0; i < chosen.size(); ++i) chosen[i] = static_cast<Index>(i);
  if (job.samples > 0 && job.samples < static_cast<Index>(chosen.size())) {
    std::mt19937_64 rng(job.seed);
    for (size_t i = chosen.size(); i > 1; --i) std::swap(chosen[i - 1], chosen[rng() % i]);
    chosen.resize(static_cast<size_t>(job.samples));
    std::sort(chosen.begin(), chosen.end());
  }
  std::vector<Vector> points;
  for (Index i : chosen) points.push_back(job.points[static_cast<size_t>(i)]);
  std::vector<Index> dims = job.features;
  if (dims.empty())
    for (Index j = 0; j < model.dim(); ++j) dims.push_back(j);
  for (Index j : dims)
    if (j < 0 || j >= model.dim()) throw InputError("feature index out of range");
  const double gamma = job.gammas.empty() ? 0.1 : job.gammas.front();
  BnbConfig config = bnb_config(job, resolve_workers(c));
  const InterpretabilityReport rep = interpretability_report(model, points, gamma, dims, config);

  Table table;
  table.columns = {"point"};
  for (Index j : dims) table.columns.push_back("delta_x" + std::to_string(j + 1));
  table.values.resize(rep.values.rows(), rep.values.cols() + 1);
  for (Index i = 0; i < rep.values.rows(); ++i) {
    table.values(i, 0) = static_cast<double>(chosen[static_cast<size_t>(i)]);
    table.values.row(i).tail(rep.values.cols()) = rep.values.row(i);
  }
  write_csv(csv_path(out), table);
  Json report{{"command", "interpret"},
              {"job", job_to_json(job)},
              {"gamma", gamma},
              {"dimensions", dims},
              {"points", chosen},
              {"values", to_json(rep.values)},
              {"mean", to_json(rep.mean)},
              {"ranking", rank_features(rep.mean)}};
  write_json(out, report);
  return kExitOk;
}

int cmd_attack(bool cross_check, const Common& c) {
  const JobSpec job = load_job(c);
  const GpModel model = load_model(job.model);
  if (model.task() == Task::Regression) throw InputError("attack needs a classifier");
  check_points(job, model);
  const fs::path out = require(c.out, "--out");
  const BnbConfig config = bnb_config(job, 1);
  const auto rows = rows_of(job);
  std::vector<AttackResult> attacks(rows.size());
  std::vector<SafetyVerdict> verdicts(rows.size());
  parallel_for(static_cast<Index>(rows.size()), resolve_workers(c), [&](Index k) {
    const Row& row = rows[static_cast<size_t>(k)];
    const Vector& x = job.points[static_cast<size_t>(row.point)];
    attacks[static_cast<size_t>(k)] = gpfgs_attack(model, x, row.gamma, job.attack_steps);
    if (cross_check) verdicts[static_cast<size_t>(k)] = certify_classification(model, x, row.gamma, config, job.norm);
  });
  Json report{{"command", "attack"}, {"job", job_to_json(job)}, {"results", Json::array()}};
  Table table{{"point", "gamma", "success", "predicted", "verdict", "consistent"},
              Matrix(static_cast<Index>(rows.size()), 6)};
  int status = kExitOk;
  for (size_t k = 0; k < rows.size(); ++k) {
    const AttackResult& a = attacks[k];
    Json r{{"point", rows[k].point},
           {"gamma", rows[k].gamma},
           {"success", a.success},
           {"predicted", a.predicted},
           {"x", to_json(a.point)},
           {"steps", a.steps_taken}};
    double verdict = -1.0;
    bool consistent = true;
    if (cross_check) {
      const SafetyVerdict& v = verdicts[k];
      r["verdict"] = to_string(v.verdict);
      verdict = static_cast<double>(static_cast<int>(v.verdict));
      consistent = !(a.success && v.verdict == Verdict::Certified);
      if (v.verdict == Verdict::Unknown) status = kExitUnknown;
    }
    r["consistent"] = consistent;
    report["results"].push_back(std::move(r));
    table.values.row(static_cast<Index>(k)) << static_cast<double>(rows[k].point), rows[k].gamma,
        a.success ? 1.0 : 0.0, static_cast<double>(a.predicted), verdict, consistent ? 1.0 : 0.0;
  }
  write_csv(csv_path(out), table);
  write_json(out, report);
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certified prediction ranges and robustness checks for Gaussian process models"};
  app.require_subcommand(1);
  Common common;

  auto* gen = app.add_subcommand("gen", "generate the Synthetic2D train/test split (CSV)");
  Index n_train = 1000;
  Index n_test = 200;
  double shift = 3.0;
  gen->add_option("--n-train", n_train, "training points")->capture_default_str();
  gen->add_option("--n-test", n_test, "test points")->capture_default_str();
  gen->add_option("--shift", shift, "class mean offset")->capture_default_str();
  add_common(gen, common);

  auto* train = app.add_subcommand("train", "fit a regression or Laplace binary model (JSON)");
  TrainOptions topt;
  train->add_option("--data", topt.data, "training CSV")->required();
  train->add_option("--holdout", topt.holdout, "CSV whose first rows become reference points");
  train->add_option("--task", topt.task, "regression | binary")->capture_default_str();
  train->add_option("--link", topt.link, "probit | logistic")->capture_default_str();
  train->add_option("--kernel", topt.kernel, "kernel JSON (default: squared exponential)");
  train->add_option("--variance", topt.variance, "signal variance")->capture_default_str();
  train->add_option("--theta", topt.theta, "inverse squared lengthscale, all dimensions")->capture_default_str();
  train->add_option("--noise", topt.noise, "regression noise variance")->capture_default_str();
  train->add_option("--lambda", topt.lambda, "probit slope")->capture_default_str();
  add_common(train, common);

  auto* certify = app.add_subcommand("certify", "robustness verdicts, safety curves or gap curves");
  add_common(certify, common);
  auto* delta = app.add_subcommand("delta", "probability spread over each box");
  add_common(delta, common);
  auto* interpret = app.add_subcommand("interpret", "one-sided interpretability scores");
  add_common(interpret, common);
  auto* attack = app.add_subcommand("attack", "gradient-sign attack with certificate cross-check");
  bool no_check = false;
  attack->add_flag("--no-check", no_check, "skip the certificate cross-check");
  add_common(attack, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitInput;
  }

  try {
    if (gen->parsed()) return cmd_gen(n_train, n_test, shift, common);
    if (train->parsed()) return cmd_train(topt, common);
    if (certify->parsed()) return cmd_certify(common);
    if (delta->parsed()) return cmd_delta(common);
    if (interpret->parsed()) return cmd_interpret(common);
    if (attack->parsed()) return cmd_attack(!no_check, common);
  } catch (const std::exception& e) {
    std::cerr << "gpcert: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitInput;
}
