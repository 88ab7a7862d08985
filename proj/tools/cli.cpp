// Copyright 2026 The conceptsteer Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "conceptsteer/conceptsteer.hpp"

namespace conceptsteer::cli {
namespace {

/// Flag combinations that parse but make no sense together.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RankFlags {
  std::optional<double> rtol;
  double atol = 0.0;
  double range_tol = 1e-8;

  RankPolicy policy() const {
    RankPolicy p;
    p.relative_tolerance = rtol;
    if (!p.relative_tolerance) {
      if (const char* env = std::getenv(kRankToleranceEnv); env && *env) {
        char* end = nullptr;
        const double v = std::strtod(env, &end);
        if (end == env || *end != '\0') {
          throw UsageError(std::string(kRankToleranceEnv) + " is not a number");
        }
        p.relative_tolerance = v;
      }
    }
    p.absolute_floor = atol;
    p.range_tolerance = range_tol;
    p.validate();
    return p;
  }

  void attach(CLI::App* cmd) {
    cmd->add_option("--rank-rtol", rtol,
                    "Relative rank tolerance (default max(rows,cols)*eps, or $" +
                        std::string(kRankToleranceEnv) + ")");
    cmd->add_option("--rank-atol", atol, "Absolute rank floor")->capture_default_str();
    cmd->add_option("--range-tol", range_tol,
                    "Relative residual allowed for Im(Sigma_XZ) in Im(Sigma_XX)")
        ->capture_default_str();
  }
};

Matrix firstRows(const Matrix& m, Index count) {
  return m.topRows(std::min(count, m.rows()));
}

std::string utcTimestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ---------------------------------------------------------------------------
// synth

ConceptWorldSpec parseWorldSpec(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::MalformedDocument, e.what());
  }
  try {
    ConceptWorldSpec spec;
    spec.dim = j.at("dim").get<Index>();
    spec.sample_count = j.at("sample_count").get<Index>();
    spec.seed = j.value("seed", std::uint64_t{0});
    spec.exclusive = j.value("exclusive", false);
    const Index d = spec.dim;
    if (d <= 0) throw Error(Errc::InvalidSpec, "dim must be positive");
    auto vec = [d](const nlohmann::json& a) {
      const auto vals = a.get<std::vector<double>>();
      if (static_cast<Index>(vals.size()) != d) {
        throw Error(Errc::InvalidSpec, "vector length differs from dim");
      }
      return Vector(Eigen::Map<const Vector>(vals.data(), d));
    };
    if (j.contains("noise_covariance")) {
      const auto& rows = j.at("noise_covariance");
      if (!rows.is_array() || static_cast<Index>(rows.size()) != d) {
        throw Error(Errc::InvalidSpec, "noise_covariance must be dim x dim");
      }
      spec.noise_covariance.resize(d, d);
      for (Index i = 0; i < d; ++i) {
        spec.noise_covariance.row(i) = vec(rows[static_cast<std::size_t>(i)]).transpose();
      }
    } else {
      spec.noise_covariance = Matrix::Identity(d, d);
    }
    if (j.contains("base_mean")) spec.base_mean = vec(j.at("base_mean"));
    for (const auto& c : j.at("concepts")) {
      ConceptSpec cs;
      cs.direction = vec(c.at("direction"));
      cs.positive_fraction = c.at("positive_fraction").get<double>();
      cs.gap = c.at("gap").get<double>();
      spec.concepts.push_back(std::move(cs));
    }
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidSpec, e.what());
  }
}

io::MomentsDocument populationDocument(const GeneratedWorld& world, Index n) {
  io::MomentsDocument doc;
  const PopulationMoments& pop = world.population;
  doc.dim = pop.mean.size();
  doc.population = true;
  doc.sample_count = n;
  doc.mean = pop.mean;
  doc.cov_xx = pop.cov_xx;
  doc.label_sample_count = n;
  doc.cov_xz = pop.cov_xz;
  doc.positive_fraction = pop.positive_fraction;
  for (Index c = 0; c < pop.mean_gap.cols(); ++c) {
    if (pop.mean_gap.col(c).norm() > 0.0) {
      doc.steering.push_back({c, pop.mean_gap.col(c), pop.positive_fraction(c)});
    }
  }
  return doc;
}

struct SynthArgs {
  std::string spec_path;
  Index dim = 8;
  Index concepts = 2;
  Index samples = 1000;
  std::uint64_t seed = 0;
  bool exclusive = false;
  std::string activations;
  std::string labels;
  std::string population;
};

int runSynth(const SynthArgs& a, std::ostream& out) {
  ConceptWorldSpec spec;
  if (!a.spec_path.empty()) {
    spec = parseWorldSpec(io::readFile(a.spec_path));
  } else {
    if (a.dim <= 0 || a.concepts < 0 || a.samples < 0) {
      throw UsageError("--dim must be positive, --concepts/--samples >= 0");
    }
    spec = randomWorldSpec(a.dim, a.concepts, a.samples, a.seed, a.exclusive);
  }
  const GeneratedWorld world = generate(spec);
  io::writeActivations(world.activations, a.activations);
  io::writeLabels(world.labels, a.labels);
  if (!a.population.empty()) {
    io::writeMoments(populationDocument(world, spec.sample_count), a.population);
  }
  out << "samples: " << world.activations.rows() << "\n"
      << "dim: " << world.activations.cols() << "\n"
      << "concepts: " << world.labels.labelDim() << "\n"
      << "partition_assumption: "
      << (world.partition_assumption_holds ? "holds" : "violated") << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// estimate

struct EstimateArgs {
  std::string activations;
  std::string concept_activations;
  std::string labels;
  std::string target_labels;
  Index max_samples = 50000;
  Index max_concept_samples = 1000;
  Index batch_size = 1024;
  Index shards = 1;
  std::string output;
};

MomentSummary shardedSummary(const Matrix& x, Index batch_size, Index shards) {
  const Index n = x.rows();
  const Index count = std::max<Index>(1, std::min(shards, n));
  std::vector<MomentSummary> parts;
  for (Index s = 0; s < count; ++s) {
    const Index start = n * s / count;
    const Index stop = n * (s + 1) / count;
    MomentSummary part(x.cols());
    for (Index b = start; b < stop; b += batch_size) {
      part.update(x.middleRows(b, std::min(batch_size, stop - b)));
    }
    parts.push_back(std::move(part));
  }
  // Pairwise tree reduction.
  while (parts.size() > 1) {
    std::vector<MomentSummary> next;
    for (std::size_t i = 0; i + 1 < parts.size(); i += 2) {
      next.push_back(mergeSummaries(parts[i], parts[i + 1]));
    }
    if (parts.size() % 2) next.push_back(parts.back());
    parts = std::move(next);
  }
  return parts.front();
}

int runEstimate(const EstimateArgs& a, std::ostream& out) {
  if (a.batch_size <= 0 || a.shards <= 0) {
    throw UsageError("--batch-size and --shards must be positive");
  }
  if (!a.target_labels.empty() && a.labels.empty()) {
    throw UsageError("--target-labels requires --labels");
  }
  if (!a.concept_activations.empty() && a.labels.empty()) {
    throw UsageError("--concept-activations requires --labels");
  }
  const Matrix all = io::readActivationsAny(a.activations);
  const Matrix x = firstRows(all, a.max_samples);

  io::MomentsDocument doc;
  doc.dim = x.cols();
  MomentSummary summary = shardedSummary(x, a.batch_size, a.shards);
  const MomentEstimate est = summary.finalize();
  doc.sample_count = summary.sampleCount();
  doc.mean = est.mean;
  doc.cov_xx = est.covariance;

  if (!a.labels.empty()) {
    const Matrix concept_all = a.concept_activations.empty()
                                   ? all
                                   : io::readActivationsAny(a.concept_activations);
    if (concept_all.cols() != x.cols()) {
      throw Error(Errc::DimensionMismatch, "concept activations differ in dim");
    }
    ConceptLabels labels = io::readLabels(a.labels);
    if (!a.target_labels.empty()) {
      const ConceptLabels target = io::readLabels(a.target_labels);
      doc.source_columns = labels.labelDim();
      labels = ConceptLabels::hstack(labels, target);
    }
    if (labels.sampleCount() != concept_all.rows()) {
      throw Error(Errc::DimensionMismatch,
                  "labels have " + std::to_string(labels.sampleCount()) +
                      " rows, concept activations " +
                      std::to_string(concept_all.rows()));
    }
    const Index n = std::min(a.max_concept_samples, concept_all.rows());
    const Matrix xc = concept_all.topRows(n);
    const ConceptLabels zc = labels.rows(0, n);

    CrossMomentSummary cross(xc.cols(), zc.labelDim());
    for (Index b = 0; b < n; b += a.batch_size) {
      const Index m = std::min(a.batch_size, n - b);
      cross.update(xc.middleRows(b, m), zc.rows(b, m));
    }
    doc.label_sample_count = n;
    doc.cov_xz = cross.covariance();
    doc.positive_fraction = cross.positiveFractions();
    for (Index c = 0; c < zc.labelDim(); ++c) {
      try {
        const SteeringVector s = steeringVector(xc, zc, c);
        doc.steering.push_back({c, s.raw_difference, s.positive_fraction});
      } catch (const Error& e) {
        if (e.code() != Errc::EmptyClass && e.code() != Errc::ZeroDirection) throw;
      }
    }
  }
  io::writeMoments(doc, a.output);
  out << "sample_count: " << doc.sample_count << "\n";
  if (doc.cov_xz) {
    out << "label_sample_count: " << doc.label_sample_count << "\n"
        << "label_dim: " << doc.cov_xz->cols() << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// fit

struct FitArgs {
  std::string moments;
  std::string mode = "erase";
  std::optional<double> beta;
  std::optional<Index> source_columns;
  Index column = 0;
  bool project_range = false;
  bool no_timestamp = false;
  RankFlags rank;
  std::string output;
};

int runFit(const FitArgs& a, std::ostream& out) {
  const auto mode = parseMode(a.mode);
  if (!mode) throw UsageError("unknown --mode " + a.mode);
  const double beta = a.beta.value_or(defaultBeta(*mode));
  const io::MomentsDocument m = io::readMoments(a.moments);

  FitOptions opts;
  opts.policy = a.rank.policy();
  opts.project_onto_range = a.project_range;

  io::TransformDocument doc;
  auto needCross = [&]() -> const Matrix& {
    if (!m.cov_xz) throw UsageError("moments file has no cross-covariance (estimate with --labels)");
    return *m.cov_xz;
  };
  auto needCov = [&]() -> const Matrix& {
    if (!m.cov_xx) throw UsageError("moments file has no covariance");
    return *m.cov_xx;
  };

  switch (*mode) {
    case Mode::LeaceErase:
    case Mode::LeaceSwitch: {
      const Matrix& xz = needCross();
      const Index k1 = a.source_columns.value_or(m.source_columns.value_or(xz.cols()));
      if (k1 <= 0 || k1 > xz.cols()) throw UsageError("--source-columns out of range");
      const Matrix block = xz.leftCols(k1);
      doc.transform = *mode == Mode::LeaceErase
                          ? fitLeaceErase(m.mean, needCov(), block, beta, opts)
                          : fitLeaceSwitch(m.mean, needCov(), block, beta, opts);
      if (k1 != xz.cols()) doc.source_columns = k1;
      break;
    }
    case Mode::MidSteer: {
      const Matrix& xz = needCross();
      Index k1 = 0;
      if (a.source_columns) {
        k1 = *a.source_columns;
      } else if (m.source_columns) {
        k1 = *m.source_columns;
      } else if (xz.cols() % 2 == 0) {
        k1 = xz.cols() / 2;
      } else {
        throw UsageError("midsteer needs an even number of label columns or --source-columns");
      }
      if (k1 <= 0 || 2 * k1 != xz.cols()) {
        throw UsageError("midsteer needs equally wide source and target label blocks");
      }
      doc.transform = fitMidSteer(m.mean, needCov(), xz.leftCols(k1), xz.rightCols(k1), beta, opts);
      doc.source_columns = k1;
      break;
    }
    case Mode::VanillaAdd:
    case Mode::VanillaErase:
    case Mode::VanillaSwitch: {
      const auto it = std::find_if(m.steering.begin(), m.steering.end(),
                                   [&](const io::SteeringRecord& s) { return s.column == a.column; });
      if (it == m.steering.end()) {
        throw Error(Errc::EmptyClass, "no steering vector for label column " + std::to_string(a.column));
      }
      const SteeringVector s = steeringFromDifference(it->raw_difference, it->positive_fraction);
      doc.transform = *mode == Mode::VanillaAdd     ? vanillaAddTransform(s, beta)
                      : *mode == Mode::VanillaErase ? vanillaEraseMatrix(s, beta)
                                                    : vanillaSwitchMatrix(s, beta);
      doc.transform.provenance += " column=" + std::to_string(a.column);
      break;
    }
  }
  doc.transform.provenance += " moments_samples=" + std::to_string(m.sample_count) +
                              " label_samples=" + std::to_string(m.label_sample_count);
  if (!a.no_timestamp) doc.transform.provenance += " created=" + utcTimestamp();
  io::writeTransform(doc, a.output);
  out << "mode: " << modeName(doc.transform.mode) << "\n"
      << "beta: " << beta << "\n"
      << "provenance: " << doc.transform.provenance << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// apply / fold

int runApply(const std::string& transform, const std::string& input,
             const std::string& output, std::ostream& out) {
  const io::TransformDocument doc = io::readTransform(transform);
  const Matrix x = io::readActivationsAny(input);
  io::writeActivations(applyTransform(doc.transform, x), output);
  out << "rows: " << x.rows() << "\n";
  return kExitOk;
}

int runFold(const std::string& transform, const std::string& layer_path,
            const std::string& output, std::ostream& out) {
  const io::TransformDocument doc = io::readTransform(transform);
  const LinearLayer layer = io::readLayer(layer_path);
  const LinearLayer folded = foldIntoLayer(doc.transform, layer);
  io::writeLayer(folded, output);
  out << "weight: " << folded.weight.rows() << "x" << folded.weight.cols() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// verify

struct VerifyArgs {
  std::string transform;
  std::string activations;
  std::string labels;
  std::string target_labels;
  std::string target;
  std::optional<Index> source_columns;
  std::optional<Index> max_samples;
  double threshold = 1e-8;
  double guardedness_ratio = 1e-6;
  bool oracle = false;
  bool csv = false;
};

int runVerify(const VerifyArgs& a, std::ostream& out) {
  const io::TransformDocument doc = io::readTransform(a.transform);
  Matrix x = io::readActivationsAny(a.activations);
  ConceptLabels labels = io::readLabels(a.labels);
  if (a.max_samples) {
    x = firstRows(x, *a.max_samples);
    labels = labels.rows(0, std::min(labels.sampleCount(), x.rows()));
  }

  TargetKind kind = defaultTarget(doc.transform.mode);
  if (!a.target.empty()) {
    const auto parsed = parseTarget(a.target);
    if (!parsed) throw UsageError("unknown --target " + a.target);
    kind = *parsed;
  }

  ConceptLabels source = labels;
  std::optional<ConceptLabels> mapped;
  if (!a.target_labels.empty()) {
    mapped = io::readLabels(a.target_labels);
    if (a.max_samples) mapped = mapped->rows(0, std::min(mapped->sampleCount(), x.rows()));
  } else {
    const Index k1 = a.source_columns.value_or(doc.source_columns.value_or(
        kind == TargetKind::MapTo ? labels.labelDim() / 2 : labels.labelDim()));
    if (k1 <= 0 || k1 > labels.labelDim()) throw UsageError("--source-columns out of range");
    source = labels.columns(0, k1);
    if (kind == TargetKind::MapTo) {
      if (labels.labelDim() != 2 * k1) {
        throw UsageError("mapto target needs --target-labels or 2x source label columns");
      }
      mapped = labels.columns(k1, k1);
    }
  }

  ConstraintTarget target;
  switch (kind) {
    case TargetKind::Zero: target = ConstraintTarget::zero(); break;
    case TargetKind::Negated: target = ConstraintTarget::negated(); break;
    case TargetKind::MapTo:
      if (!mapped) throw UsageError("mapto target needs target labels");
      target = ConstraintTarget::mapTo(*mapped);
      break;
  }

  VerifyOptions opts;
  opts.residual_threshold = a.threshold;
  opts.guardedness_ratio = a.guardedness_ratio;
  opts.oracle = a.oracle;
  const VerificationReport report = verifyTransform(doc.transform, x, source, target, opts);
  out << (a.csv ? report.toCsv() : report.toText());
  return report.pass() ? kExitOk : kExitFailure;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Optimal affine concept erasure, switching and steering."};
  app.name("conceptsteer");
  app.require_subcommand(1);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic concept world");
  synth_cmd->add_option("--spec", synth.spec_path, "World spec JSON")->check(CLI::ExistingFile);
  synth_cmd->add_option("--dim", synth.dim, "Dimension (random world)")->capture_default_str();
  synth_cmd->add_option("--concepts", synth.concepts, "Concept count (random world)")->capture_default_str();
  synth_cmd->add_option("--samples", synth.samples, "Sample count (random world)")->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed, "Seed (random world)")->capture_default_str();
  synth_cmd->add_flag("--exclusive", synth.exclusive, "At most one concept per sample");
  synth_cmd->add_option("--activations", synth.activations, "Output activation file")->required();
  synth_cmd->add_option("--labels", synth.labels, "Output label file")->required();
  synth_cmd->add_option("--population", synth.population, "Output population moments JSON");

  EstimateArgs est;
  auto* est_cmd = app.add_subcommand("estimate", "Estimate mean, covariance and cross-covariances");
  est_cmd->add_option("--activations", est.activations, "Activations for mean / Sigma_XX (.actv or .csv)")->required();
  est_cmd->add_option("--concept-activations", est.concept_activations, "Separate activations for Sigma_XZ");
  est_cmd->add_option("--labels", est.labels, "Concept labels (source block)");
  est_cmd->add_option("--target-labels", est.target_labels, "Target concept labels (directed maps)");
  est_cmd->add_option("--max-samples", est.max_samples, "Rows used for Sigma_XX")->capture_default_str();
  est_cmd->add_option("--max-concept-samples", est.max_concept_samples, "Rows used for Sigma_XZ")->capture_default_str();
  est_cmd->add_option("--batch-size", est.batch_size, "Streaming batch size")->capture_default_str();
  est_cmd->add_option("--shards", est.shards, "Independent summaries merged at the end")->capture_default_str();
  est_cmd->add_option("-o,--output", est.output, "Output moments JSON")->required();

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a transform from a moments file");
  fit_cmd->add_option("--moments", fit.moments, "Moments JSON")->required();
  fit_cmd->add_option("--mode", fit.mode, "erase|switch|midsteer|vanilla-erase|vanilla-switch|vanilla-add")
      ->capture_default_str();
  fit_cmd->add_option("--beta", fit.beta, "Strength (default: 1 erase, 2 switch, 1 midsteer)");
  fit_cmd->add_option("--source-columns", fit.source_columns, "Leading label columns forming the source block");
  fit_cmd->add_option("--column", fit.column, "Label column for vanilla modes")->capture_default_str();
  fit_cmd->add_flag("--project-range", fit.project_range, "Project Sigma_XZ onto Im(Sigma_XX) instead of failing");
  fit_cmd->add_flag("--no-timestamp", fit.no_timestamp, "Omit the creation time from provenance");
  fit.rank.attach(fit_cmd);
  fit_cmd->add_option("-o,--output", fit.output, "Output transform JSON")->required();

  std::string apply_transform, apply_input, apply_output;
  auto* apply_cmd = app.add_subcommand("apply", "Apply a transform to activations");
  apply_cmd->add_option("--transform", apply_transform, "Transform JSON")->required();
  apply_cmd->add_option("--activations", apply_input, "Input activations")->required();
  apply_cmd->add_option("-o,--output", apply_output, "Output activations")->required();

  std::string fold_transform, fold_layer, fold_output;
  auto* fold_cmd = app.add_subcommand("fold", "Fold a transform into a linear layer");
  fold_cmd->add_option("--transform", fold_transform, "Transform JSON")->required();
  fold_cmd->add_option("--layer", fold_layer, "Layer file (LAYR)")->required();
  fold_cmd->add_option("-o,--output", fold_output, "Output layer file")->required();

  VerifyArgs ver;
  auto* ver_cmd = app.add_subcommand("verify", "Check a transform against its covariance constraint");
  ver_cmd->add_option("--transform", ver.transform, "Transform JSON")->required();
  ver_cmd->add_option("--activations", ver.activations, "Activations")->required();
  ver_cmd->add_option("--labels", ver.labels, "Labels (source block first)")->required();
  ver_cmd->add_option("--target-labels", ver.target_labels, "Target labels for mapto");
  ver_cmd->add_option("--target", ver.target, "zero|negated|mapto (default from transform mode)");
  ver_cmd->add_option("--source-columns", ver.source_columns, "Leading label columns forming the source block");
  ver_cmd->add_option("--max-samples", ver.max_samples, "Only use the first N rows");
  ver_cmd->add_option("--threshold", ver.threshold, "Constraint residual threshold")->capture_default_str();
  ver_cmd->add_option("--guardedness-ratio", ver.guardedness_ratio, "Post/pre guardedness ratio (zero target)")
      ->capture_default_str();
  ver_cmd->add_flag("--oracle", ver.oracle, "Also compare against the KKT oracle");
  ver_cmd->add_flag("--csv", ver.csv, "Emit the report as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << e.what() << "\n";
      return kExitOk;
    }
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (synth_cmd->parsed()) return runSynth(synth, out);
    if (est_cmd->parsed()) return runEstimate(est, out);
    if (fit_cmd->parsed()) return runFit(fit, out);
    if (apply_cmd->parsed()) return runApply(apply_transform, apply_input, apply_output, out);
    if (fold_cmd->parsed()) return runFold(fold_transform, fold_layer, fold_output, out);
    if (ver_cmd->parsed()) return runVerify(ver, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("conceptsteer");
  for (const std::string& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace conceptsteer::cli
