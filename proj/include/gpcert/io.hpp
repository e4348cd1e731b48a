// Copyright 2026 The gpcert Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "gpcert/bnb.hpp"
#include "gpcert/gp_model.hpp"
#include "gpcert/robustness.hpp"

namespace gpcert {

using Json = nlohmann::json;

/// Malformed or inconsistent input (bad file, schema violation, failed
/// reference check).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Json kernel_to_json(const KernelSpec& spec);
KernelSpec kernel_from_json(const Json& j);

/// Stored prediction used to detect corrupted or mismatched model files:
/// class probabilities for classifiers, latent means for regression.
struct ReferencePrediction {
  Vector x;
  Vector value;
};

std::vector<ReferencePrediction> reference_predictions(const GpModel& model, const std::vector<Vector>& points);
Vector model_output(const GpModel& model, const Vector& x);

Json model_to_json(const GpModel& model, const std::vector<ReferencePrediction>& references = {});
/// Parses and validates a model; reference predictions must be reproduced
/// within `tolerance` or InputError is thrown.
GpModel model_from_json(const Json& j, double tolerance = 1e-6);

Json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const Json& j);
GpModel load_model(const std::filesystem::path& path);
void save_model(const std::filesystem::path& path, const GpModel& model,
                const std::vector<ReferencePrediction>& references = {});

/// Numeric table with a header row.
struct Table {
  std::vector<std::string> columns;
  Matrix values;
};

Table read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const Table& table);

/// Dataset columns x1..xd plus a trailing `label` (or regression `y`)
/// column.
struct Dataset {
  Matrix inputs;
  Vector labels;
};

Dataset read_dataset(const std::filesystem::path& path);
void write_dataset(const std::filesystem::path& path, const Dataset& data);

/// Per-iteration branch-and-bound progress as iteration,lower,upper,regions.
void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceRecord>& trace);

enum class JobMode { Certify, Delta, Interpret, Attack, SafetyCurve, GapCurve };

std::string to_string(JobMode mode);

struct JobSpec {
  std::filesystem::path model;
  JobMode mode = JobMode::Certify;
  std::vector<Vector> points;
  std::vector<double> gammas;
  double epsilon = 0.01;
  Index cells = 0;
  std::vector<Index> features;
  std::vector<Index> budgets;
  std::uint64_t seed = 0;
  int max_iterations = 10000;
  double max_seconds = 600.0;
  SplitRule split = SplitRule::Random;
  double norm = kInfNorm;
  double delta = 0.0;  ///< regression tolerance
  Index samples = 0;   ///< interpret: points drawn from `points`, 0 keeps all
  int attack_steps = 20;
};

/// Relative paths (model, dataset) resolve against `base`. Points may be
/// given inline or as {dataset, indices}.
JobSpec job_from_json(const Json& j, const std::filesystem::path& base = {});
Json job_to_json(const JobSpec& job);

BnbConfig bnb_config(const JobSpec& job, int workers);

Json verdict_to_json(const SafetyVerdict& v);
Json to_json(const Vector& v);
Vector vector_from_json(const Json& j);
Matrix matrix_from_json(const Json& j);
Json to_json(const Matrix& m);

}  // namespace gpcert
