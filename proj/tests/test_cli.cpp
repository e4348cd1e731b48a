// Copyright 2026 The gpcert Authors
// Licensed under the Apache License, Version 2.0
//
// Serialization round trips and end-to-end runs of the command-line tool.
// Frozen values come from tests/oracles/oracles.py.

#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "gpcert/io.hpp"
#include "gpcert/synthetic.hpp"
#include "support.hpp"

using namespace gpcert;
using namespace gpcert::testing;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("gpcert_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run(const std::string& args) {
  const std::string cmd = std::string(GPCERT_BINARY) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Two well separated 1-D clusters labelled 1 (left) and 2 (right).
Dataset clusters() {
  Dataset d;
  d.inputs.resize(10, 1);
  d.labels.resize(10);
  for (int i = 0; i < 10; ++i) {
    d.inputs(i, 0) = i < 5 ? -2.0 + 0.2 * i : 1.2 + 0.2 * i;
    d.labels(i) = i < 5 ? 1.0 : 2.0;
  }
  return d;
}

}  // namespace

TEST_CASE("kernel JSON round trip") {
  std::mt19937_64 rng(61);
  for (int k = 0; k < 6; ++k) {
    const KernelSpec spec = random_kernel(rng, 2, family_at(k));
    const KernelSpec back = kernel_from_json(kernel_to_json(spec));
    const Vector x = vec({0.3, -0.7});
    const Vector y = vec({-0.2, 0.4});
    CHECK(eval_kernel(back, x, y) == eval_kernel(spec, x, y));
  }
  CHECK_THROWS_AS(kernel_from_json(Json{{"family", "cubic"}}), InputError);
}

TEST_CASE("model JSON round trip and reference check") {
  std::mt19937_64 rng(63);
  const GpModel m = random_binary_model(rng, 10, 2, random_kernel(rng, 2, Family::SE), Link{});
  const std::vector<Vector> pts = {vec({0.1, 0.2}), vec({-1.0, 0.5})};
  Json j = model_to_json(m, reference_predictions(m, pts));
  const GpModel back = model_from_json(j);
  for (const Vector& p : pts) CHECK(back.predict_class_prob(p)(0) == m.predict_class_prob(p)(0));

  // A perturbed weight no longer reproduces the stored predictions.
  j["t"][0] = j["t"][0].get<double>() + 0.5;
  CHECK_THROWS_AS(model_from_json(j), InputError);
  Json bad = model_to_json(m);
  bad["format"] = "something-else";
  CHECK_THROWS_AS(model_from_json(bad), InputError);
}

TEST_CASE("dataset CSV round trip") {
  const fs::path dir = scratch("csv");
  const Dataset d = clusters();
  write_dataset(dir / "d.csv", d);
  const Dataset back = read_dataset(dir / "d.csv");
  CHECK(back.inputs == d.inputs);
  CHECK(back.labels == d.labels);
  std::ofstream(dir / "broken.csv") << "x1,label\n1.0\n";
  CHECK_THROWS_AS(read_dataset(dir / "broken.csv"), InputError);
  CHECK_THROWS_AS(read_dataset(dir / "missing.csv"), InputError);
}

TEST_CASE("job JSON parsing") {
  const fs::path dir = scratch("job");
  std::mt19937_64 rng(65);
  save_model(dir / "m.json", random_binary_model(rng, 8, 2, random_kernel(rng, 2, Family::SE), Link{}));
  const Json j{{"model", "m.json"}, {"mode", "delta"}, {"points", {{0.1, 0.2}}}, {"gammas", {0.05, 0.1}},
               {"norm", 2}, {"split", "widest"}};
  const JobSpec job = job_from_json(j, dir);
  CHECK(job.mode == JobMode::Delta);
  CHECK(job.points.size() == 1);
  CHECK(job.gammas == std::vector<double>{0.05, 0.1});
  CHECK(job.norm == 2.0);
  CHECK(job.split == SplitRule::WidestDimension);
  const JobSpec again = job_from_json(job_to_json(job), dir);
  CHECK(again.gammas == job.gammas);
  CHECK(again.points == job.points);

  Json neg = j;
  neg["gammas"] = {-0.1};
  CHECK_THROWS_AS(job_from_json(neg, dir), InputError);
  Json nomodel = j;
  nomodel["model"] = "absent.json";
  CHECK_THROWS_AS(job_from_json(nomodel, dir), InputError);
}

TEST_CASE("Synthetic2D generator") {
  const SyntheticSplit a = make_synthetic2d(101, 20, 4);
  const SyntheticSplit b = make_synthetic2d(101, 20, 4);
  CHECK(a.train.inputs == b.train.inputs);
  CHECK(a.test.labels == b.test.labels);
  CHECK(a.train.inputs.rows() == 101);
  CHECK(a.train.inputs.cols() == 2);
  CHECK((a.train.labels.array() == 1.0).count() == 51);
  CHECK((a.train.labels.array() == 2.0).count() == 50);
  CHECK((a.test.labels.array() == 1.0).count() == 10);
  CHECK(make_synthetic2d(101, 20, 5).train.inputs != a.train.inputs);
  const Vector s = to_signed_labels(vec({1.0, 2.0}));
  CHECK(s == vec({1.0, -1.0}));
}

TEST_CASE("gen and train are reproducible") {
  const fs::path dir = scratch("gen");
  REQUIRE(run("gen --n-train 60 --n-test 10 --seed 3 --out " + (dir / "a").string()) == 0);
  REQUIRE(run("gen --n-train 60 --n-test 10 --seed 3 --out " + (dir / "b").string()) == 0);
  CHECK(slurp(dir / "a" / "train.csv") == slurp(dir / "b" / "train.csv"));
  const std::string train = "train --data " + (dir / "a" / "train.csv").string() + " --holdout " +
                            (dir / "a" / "test.csv").string() + " --seed 1 --out ";
  REQUIRE(run(train + (dir / "m1.json").string()) == 0);
  REQUIRE(run(train + (dir / "m2.json").string()) == 0);
  CHECK(slurp(dir / "m1.json") == slurp(dir / "m2.json"));
  const GpModel m = load_model(dir / "m1.json");
  CHECK(m.task() == Task::BinaryClassification);
  CHECK(read_json(dir / "m1.json").at("reference_predictions").size() == 10);
}

TEST_CASE("train regression matches a dense solve") {
  const fs::path dir = scratch("reg");
  Dataset d;
  d.inputs = vec({-1.0, 0.5, 2.0});
  d.labels = vec({0.3, -1.2, 0.8});
  write_dataset(dir / "d.csv", d);
  REQUIRE(run("train --task regression --theta 0.5 --noise 0.1 --data " + (dir / "d.csv").string() + " --out " +
              (dir / "m.json").string()) == 0);
  const GpModel m = load_model(dir / "m.json");
  CHECK(m.weights()(0, 0) == doctest::Approx(0.7537602709957406).epsilon(1e-10));
  CHECK(m.weights()(1, 0) == doctest::Approx(-1.6713591696517174).epsilon(1e-10));
  CHECK(m.weights()(2, 0) == doctest::Approx(1.2129430527529785).epsilon(1e-10));
  CHECK(m.posterior_at(vec({0.25})).covariance(0, 0) == doctest::Approx(0.11353681318726139).epsilon(1e-10));
}

TEST_CASE("input errors exit with status 1") {
  const fs::path dir = scratch("errors");
  Dataset one = clusters();
  one.labels.setOnes();
  write_dataset(dir / "one.csv", one);
  CHECK(run("train --data " + (dir / "one.csv").string() + " --out " + (dir / "m.json").string()) == 1);
  CHECK(run("train --data " + (dir / "absent.csv").string() + " --out " + (dir / "m.json").string()) == 1);
  CHECK(run("certify --model " + (dir / "absent.json").string() + " --out " + (dir / "r.json").string()) == 1);
  CHECK(run("certify --bogus-flag") == 1);

  std::ofstream(dir / "junk.json") << "{ not json";
  CHECK(run("certify --model " + (dir / "junk.json").string() + " --out " + (dir / "r.json").string()) == 1);

  // Tampered weights fail the reference check.
  write_dataset(dir / "c.csv", clusters());
  REQUIRE(run("train --data " + (dir / "c.csv").string() + " --out " + (dir / "good.json").string()) == 0);
  Json j = read_json(dir / "good.json");
  j["t"][0] = j["t"][0].get<double>() + 1.0;
  write_json(dir / "tampered.json", j);
  write_json(dir / "job.json", Json{{"model", "tampered.json"}, {"points", {{0.0}}}, {"gamma", 0.1}});
  CHECK(run("certify --job " + (dir / "job.json").string() + " --out " + (dir / "r.json").string()) == 1);

  write_json(dir / "neg.json", Json{{"model", "good.json"}, {"points", {{0.0}}}, {"gamma", -0.1}});
  CHECK(run("certify --job " + (dir / "neg.json").string() + " --out " + (dir / "r.json").string()) == 1);
  CHECK(run("certify --job " + (dir / "neg.json").string() + " --out " + (dir / "r.json").string() +
            " --workers nope") == 1);
}

TEST_CASE("certify verdicts and exit codes") {
  const fs::path dir = scratch("certify");
  write_dataset(dir / "c.csv", clusters());
  REQUIRE(run("train --data " + (dir / "c.csv").string() + " --theta 1 --out " + (dir / "m.json").string()) == 0);

  write_json(dir / "empty.json", Json{{"model", "m.json"}, {"points", Json::array()}, {"gamma", 0.1}});
  CHECK(run("certify --job " + (dir / "empty.json").string() + " --out " + (dir / "e.json").string()) == 0);
  CHECK(read_json(dir / "e.json").at("results").empty());

  write_json(dir / "job.json", Json{{"model", "m.json"}, {"points", {{-1.8}, {1.8}}}, {"gammas", {0.05, 0.2}}});
  REQUIRE(run("certify --job " + (dir / "job.json").string() + " --out " + (dir / "r.json").string()) == 0);
  const Json r = read_json(dir / "r.json");
  REQUIRE(r.at("results").size() == 4);
  for (const Json& v : r.at("results")) CHECK(v.at("verdict") == "certified");
  CHECK(read_csv(dir / "r.csv").values.rows() == 4);

  // Whole span between the clusters: the label flips inside the box.
  CHECK(run("certify --job " + (dir / "job.json").string() + " --gamma 4 --out " + (dir / "f.json").string()) == 0);
  for (const Json& v : read_json(dir / "f.json").at("results")) CHECK(v.at("verdict") == "falsified");

  // A one-iteration budget with a tight tolerance leaves the middle undecided.
  write_json(dir / "tight.json", Json{{"model", "m.json"}, {"points", {{-0.2}}}, {"gamma", 0.3},
                                      {"max_iterations", 1}});
  const std::string tight = "certify --job " + (dir / "tight.json").string() + " --epsilon 1e-9 --out " +
                            (dir / "u.json").string();
  const int code = run(tight);
  const std::string verdict = read_json(dir / "u.json").at("results")[0].at("verdict");
  CHECK(code == (verdict == "unknown" ? 2 : 0));

  // Worker count from the environment gives the same report.
  setenv("GPCERT_WORKERS", "3", 1);
  REQUIRE(run("certify --job " + (dir / "job.json").string() + " --out " + (dir / "w.json").string()) == 0);
  unsetenv("GPCERT_WORKERS");
  const Json w = read_json(dir / "w.json").at("results");
  REQUIRE(w.size() == 4);
  for (size_t i = 0; i < 4; ++i) CHECK(w[i].at("verdict") == r.at("results")[i].at("verdict"));
}

TEST_CASE("delta, interpret and attack commands") {
  const fs::path dir = scratch("metrics");
  // Label depends on the first coordinate only.
  Dataset d;
  d.inputs.resize(12, 2);
  d.labels.resize(12);
  for (int i = 0; i < 12; ++i) {
    d.inputs(i, 0) = i < 6 ? -2.0 + 0.2 * i : 0.9 + 0.2 * i;
    d.inputs(i, 1) = (i % 3) - 1.0;
    d.labels(i) = i < 6 ? 1.0 : 2.0;
  }
  write_dataset(dir / "d.csv", d);
  REQUIRE(run("train --data " + (dir / "d.csv").string() + " --theta 0.3 --out " + (dir / "m.json").string()) == 0);

  write_json(dir / "job.json", Json{{"model", "m.json"}, {"points", {{-0.3, 0.0}, {0.4, 0.5}}}, {"gammas", {0.1, 0.3}}});
  REQUIRE(run("delta --job " + (dir / "job.json").string() + " --out " + (dir / "delta.json").string()) == 0);
  const Json dj = read_json(dir / "delta.json");
  REQUIRE(dj.at("results").size() == 4);
  for (const Json& r : dj.at("results")) {
    CHECK(r.at("delta").get<double>() >= 0.0);
    CHECK(r.at("delta").get<double>() <= 1.0);
  }
  CHECK(read_csv(dir / "delta.csv").values.rows() == 4);

  REQUIRE(run("interpret --job " + (dir / "job.json").string() + " --gamma 0.2 --out " +
              (dir / "interp.json").string()) == 0);
  const Json ij = read_json(dir / "interp.json");
  CHECK(ij.at("ranking")[0] == 0);
  const Vector mean = vector_from_json(ij.at("mean"));
  CHECK(std::abs(mean(0)) > std::abs(mean(1)));

  REQUIRE(run("attack --job " + (dir / "job.json").string() + " --out " + (dir / "attack.json").string()) == 0);
  for (const Json& r : read_json(dir / "attack.json").at("results")) {
    CHECK(r.at("consistent").get<bool>());
    if (r.at("success").get<bool>()) CHECK(r.at("verdict") != "certified");
  }
}
