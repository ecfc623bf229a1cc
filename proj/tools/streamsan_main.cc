// Copyright 2026 The Streamsan Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// streamsan: differentially private stream sanitization and quantiles.
//
//   streamsan sanitize  --input data.txt --epsilon 1 --block-size auto \
//                       --out-stream sanitized.txt --out-report report.json
//   streamsan quantiles --input data.txt --quantiles 0.1,0.5,0.9
//   streamsan eval      --input data.txt --trials 100
//   streamsan calibrate --alpha 0.05 --beta 0.05 --epsilon 1 --universe 1024
//
// Exit codes: 0 success, 2 config error, 3 data error, 4 invariant violation.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_split.h"
#include "json.hpp"
#include "streamsan/core.h"
#include "streamsan/evaluation.h"
#include "streamsan/ingest.h"
#include "streamsan/pipeline.h"
#include "streamsan/stream_sanitizer.h"

namespace streamsan {
namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitInvariant = 4;

struct Flags {
  std::string input = "-";
  int csv_col = -1;
  bool csv_header = false;
  bool lenient = false;
  std::optional<double> lo;
  std::optional<double> hi;
  uint32_t universe = 1024;
  std::string epsilon = "1";
  double delta = 0;
  double alpha = 0.05;
  double beta = 0.05;
  std::string block_size = "auto";
  double subsample_rate = 1.0;
  std::string partial_block = "strict";
  uint64_t seed = 0;
  int64_t snapshot_every = 0;
  std::string quantiles = "0.1,0.25,0.5,0.75,0.9";
  std::string out_stream;
  std::string out_report;
  std::string out_sketch;
  int64_t trials = 100;
  std::string confidence_mode = "union";
  bool emit_index = false;
  double sketch_alpha = 0.01;
  int threads = 0;
};

class CliError {
 public:
  CliError(int code, absl::Status status)
      : code_(code), status_(std::move(status)) {}
  int code() const { return code_; }
  const absl::Status& status() const { return status_; }

 private:
  int code_;
  absl::Status status_;
};

absl::StatusOr<double> ParseEpsilon(const std::string& text) {
  if (text == "inf" || text == "infinity" || text == "Inf") return kNoiseless;
  double value = 0;
  const auto [end, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size()) {
    return absl::InvalidArgumentError(
        absl::StrCat("bad --epsilon value '", text, "'"));
  }
  return value;
}

absl::StatusOr<std::vector<double>> ParseQuantiles(const std::string& text) {
  std::vector<double> out;
  for (absl::string_view part : absl::StrSplit(text, ',', absl::SkipEmpty())) {
    double q = 0;
    const auto [end, ec] =
        std::from_chars(part.data(), part.data() + part.size(), q);
    if (ec != std::errc() || end != part.data() + part.size()) {
      return absl::InvalidArgumentError(
          absl::StrCat("bad quantile '", part, "'"));
    }
    out.push_back(q);
  }
  return out;
}

template <typename T>
T OrConfigError(absl::StatusOr<T> value) {
  if (!value.ok()) throw CliError(kExitConfig, value.status());
  return *std::move(value);
}

PipelineConfig BuildConfig(const Flags& f) {
  const double lo = f.lo.value_or(0.0);
  const double hi = f.hi.value_or(static_cast<double>(f.universe));
  PipelineConfig config(OrConfigError(Domain::Create(f.universe, lo, hi)));
  config.stream.privacy = OrConfigError(
      PrivacyParams::Create(OrConfigError(ParseEpsilon(f.epsilon)), f.delta));
  config.stream.accuracy =
      OrConfigError(AccuracyParams::Create(f.alpha, f.beta));
  if (f.block_size == "auto") {
    config.auto_block_size = true;
  } else {
    int64_t n = 0;
    const auto [end, ec] = std::from_chars(
        f.block_size.data(), f.block_size.data() + f.block_size.size(), n);
    if (ec != std::errc() || end != f.block_size.data() + f.block_size.size()) {
      throw CliError(kExitConfig,
                     absl::InvalidArgumentError(absl::StrCat(
                         "bad --block-size '", f.block_size, "'")));
    }
    config.stream.block_size = n;
  }
  config.stream.subsample_rate = f.subsample_rate;
  config.stream.partial_block_policy =
      OrConfigError(ParsePartialBlockPolicy(f.partial_block));
  config.stream.seed = f.seed;
  config.snapshot_every = f.snapshot_every;
  config.quantiles = OrConfigError(ParseQuantiles(f.quantiles));
  config.confidence_mode = OrConfigError(ParseConfidenceMode(f.confidence_mode));
  config.emit_indices = f.emit_index;
  config.sketch_alpha = f.sketch_alpha;
  if (absl::Status s = config.Validate(); !s.ok()) {
    throw CliError(kExitConfig, s);
  }
  // Surface "auto" infeasibility as a config error before reading input.
  OrConfigError(ResolveBlockSize(config));
  return config;
}

IngestOptions BuildIngestOptions(const Flags& f) {
  IngestOptions options;
  if (f.csv_col >= 0) options.csv_column = f.csv_col;
  options.has_header = f.csv_header;
  options.lenient = f.lenient;
  return options;
}

// Owns a file stream, or borrows stdin/stdout for "-".
class InputSource {
 public:
  explicit InputSource(const std::string& path) {
    if (path == "-" || path.empty()) return;
    file_ = std::make_unique<std::ifstream>(path);
    if (!*file_) {
      throw CliError(kExitData, absl::NotFoundError(
                                    absl::StrCat("cannot open ", path)));
    }
  }
  std::istream& stream() { return file_ ? *file_ : std::cin; }

 private:
  std::unique_ptr<std::ifstream> file_;
};

class OutputSink {
 public:
  explicit OutputSink(const std::string& path) {
    if (path == "-" || path.empty()) return;
    file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
    if (!*file_) {
      throw CliError(kExitData, absl::PermissionDeniedError(
                                    absl::StrCat("cannot write ", path)));
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

void WriteJson(const std::string& path, const nlohmann::json& j) {
  OutputSink sink(path);
  sink.stream() << j.dump(2) << '\n';
}

PipelineResult RunPipeline(const Flags& f, const PipelineConfig& config,
                           std::ostream* sanitized_out,
                           RecordReader& reader) {
  Pipeline pipeline = OrConfigError(Pipeline::Create(config, sanitized_out));
  while (true) {
    absl::StatusOr<std::optional<Index>> next = reader.Next();
    if (!next.ok()) throw CliError(kExitData, next.status());
    if (!next->has_value()) break;
    pipeline.Push(**next);
  }
  absl::StatusOr<PipelineResult> result = pipeline.Finish();
  if (!result.ok()) throw CliError(kExitData, result.status());
  if (reader.skipped_malformed() > 0 || reader.clamped() > 0) {
    result->warnings.push_back(absl::StrCat(
        "lenient ingestion skipped ", reader.skipped_malformed(),
        " malformed records and clamped ", reader.clamped(),
        " out-of-range values"));
  }
  if (!f.out_sketch.empty()) {
    OutputSink sink(f.out_sketch);
    sink.stream() << result->sketch_blob;
  }
  return *std::move(result);
}

int CheckComposition(bool holds) {
  if (holds) return 0;
  std::cerr << "invariant violation: stream Kolmogorov error exceeds the "
               "maximum per-block error\n";
  return kExitInvariant;
}

int RunSanitize(const Flags& f) {
  const PipelineConfig config = BuildConfig(f);
  InputSource in(f.input);
  RecordReader reader(in.stream(), config.domain, BuildIngestOptions(f));
  OutputSink out(f.out_stream);
  PipelineResult result = RunPipeline(f, config, &out.stream(), reader);
  out.stream().flush();
  if (!f.out_report.empty()) WriteJson(f.out_report, ReportToJson(config, result));
  for (const std::string& w : result.warnings) std::cerr << "warning: " << w << '\n';
  return CheckComposition(result.composition_holds);
}

int RunQuantiles(const Flags& f) {
  const PipelineConfig config = BuildConfig(f);
  InputSource in(f.input);
  RecordReader reader(in.stream(), config.domain, BuildIngestOptions(f));
  std::unique_ptr<OutputSink> stream_sink;
  if (!f.out_stream.empty()) stream_sink = std::make_unique<OutputSink>(f.out_stream);
  PipelineResult result = RunPipeline(
      f, config, stream_sink ? &stream_sink->stream() : nullptr, reader);
  const nlohmann::json report = ReportToJson(config, result);
  if (!f.out_report.empty()) WriteJson(f.out_report, report);
  nlohmann::json answers = {{"quantiles", report["quantiles"]},
                            {"privacy", report["privacy"]}};
  if (config.snapshot_every > 0) answers["snapshots"] = report["snapshots"];
  std::cout << answers.dump(2) << '\n';
  for (const std::string& w : result.warnings) std::cerr << "warning: " << w << '\n';
  return CheckComposition(result.composition_holds);
}

int RunEval(const Flags& f) {
  const PipelineConfig config = BuildConfig(f);
  if (f.trials < 1) {
    throw CliError(kExitConfig, absl::InvalidArgumentError("--trials must be >= 1"));
  }
  InputSource in(f.input);
  absl::StatusOr<std::vector<Index>> input =
      IngestAll(in.stream(), config.domain, BuildIngestOptions(f));
  if (!input.ok()) throw CliError(kExitData, input.status());
  absl::StatusOr<EvalSummary> summary =
      EvalUtility(config, *input, f.trials, f.threads);
  if (!summary.ok()) throw CliError(kExitData, summary.status());
  const nlohmann::json j = EvalSummaryToJson(*summary);
  if (!f.out_report.empty()) {
    WriteJson(f.out_report, j);
  } else {
    std::cout << j.dump(2) << '\n';
  }
  std::printf("trials=%lld block_size=%lld success_rate=%.4f "
              "per_block_failure_rate=%.4f chernoff_exceed_rate=%.4f "
              "(bound %.4f) quantile_success_rate=%.4f\n",
              static_cast<long long>(summary->trials),
              static_cast<long long>(summary->block_size),
              summary->success_rate, summary->per_block_failure_rate,
              summary->chernoff_exceed_rate, summary->chernoff_bound,
              summary->quantile_success_rate);
  return CheckComposition(summary->composition_holds);
}

int RunCalibrate(const Flags& f) {
  const Domain domain =
      OrConfigError(Domain::Create(f.universe, f.lo.value_or(0.0),
                                   f.hi.value_or(static_cast<double>(f.universe))));
  const double epsilon = OrConfigError(ParseEpsilon(f.epsilon));
  OrConfigError(PrivacyParams::Create(epsilon, f.delta));
  const AccuracyParams accuracy =
      OrConfigError(AccuracyParams::Create(f.alpha, f.beta));
  const CalibrationTable table =
      Calibrate(accuracy, epsilon, domain, f.trials, f.seed, f.threads);
  std::printf("n_min = %lld  (C = %g, alpha = %g, beta = %g, epsilon = %s, "
              "U = %u)\n",
              static_cast<long long>(table.n_min), table.constant, f.alpha,
              f.beta, f.epsilon.c_str(), f.universe);
  std::printf("%12s  %14s  %12s\n", "block_size", "failure_rate",
              "mean_error");
  for (const CalibrationRow& r : table.rows) {
    std::printf("%12lld  %14.4f  %12.6f\n",
                static_cast<long long>(r.block_size), r.failure_rate,
                r.mean_error);
  }
  if (!f.out_report.empty()) WriteJson(f.out_report, CalibrationToJson(table));
  return 0;
}

void AddPipelineFlags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--input", f.input, "Input path, '-' for stdin");
  cmd->add_option("--csv-col", f.csv_col, "Zero-based CSV column to read");
  cmd->add_flag("--csv-header", f.csv_header, "Skip the first input line");
  cmd->add_flag("--lenient", f.lenient,
                "Skip malformed records and clamp out-of-range values");
  cmd->add_option("--delta", f.delta, "Declared delta of the block sanitizer");
  cmd->add_option("--block-size", f.block_size, "Block size n, or 'auto'");
  cmd->add_option("--subsample-rate", f.subsample_rate,
                  "Keep each item with this probability");
  cmd->add_option("--partial-block", f.partial_block,
                  "Trailing partial block: strict or sanitize")
      ->check(CLI::IsMember({"strict", "sanitize"}));
  cmd->add_option("--snapshot-every", f.snapshot_every,
                  "Quantile snapshot every this many blocks (0 = off)");
  cmd->add_option("--quantiles", f.quantiles, "Comma-separated quantiles");
  cmd->add_option("--out-stream", f.out_stream, "Sanitized stream output");
  cmd->add_option("--out-sketch", f.out_sketch, "Serialized sketch output");
  cmd->add_option("--confidence-mode", f.confidence_mode,
                  "Confidence bound to headline: union or chernoff")
      ->check(CLI::IsMember({"union", "chernoff"}));
  cmd->add_flag("--emit-index", f.emit_index,
                "Write domain indices instead of bucket lower bounds");
  cmd->add_option("--sketch-alpha", f.sketch_alpha,
                  "Rank accuracy of the quantile sketch");
}

void AddCommonFlags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--lo", f.lo, "Lower raw bound (default 0)");
  cmd->add_option("--hi", f.hi, "Upper raw bound (default: universe size)");
  cmd->add_option("--universe", f.universe, "Universe size U");
  cmd->add_option("--epsilon", f.epsilon, "Block budget epsilon, or 'inf'");
  cmd->add_option("--alpha", f.alpha, "Target accuracy");
  cmd->add_option("--beta", f.beta, "Target failure probability");
  cmd->add_option("--seed", f.seed, "RNG seed");
  cmd->add_option("--out-report", f.out_report, "JSON report path");
}

int Main(int argc, char** argv) {
  CLI::App app{"Differentially private stream sanitization and quantiles"};
  app.require_subcommand(1);
  Flags f;
  CLI::App* sanitize = app.add_subcommand("sanitize", "Sanitize a stream");
  CLI::App* quantiles =
      app.add_subcommand("quantiles", "Private quantiles of a stream");
  CLI::App* eval = app.add_subcommand("eval", "Monte Carlo utility evaluation");
  CLI::App* calibrate =
      app.add_subcommand("calibrate", "Block size calibration table");
  for (CLI::App* cmd : {sanitize, quantiles, eval, calibrate}) {
    AddCommonFlags(cmd, f);
  }
  for (CLI::App* cmd : {sanitize, quantiles, eval}) AddPipelineFlags(cmd, f);
  for (CLI::App* cmd : {eval, calibrate}) {
    cmd->add_option("--trials", f.trials, "Number of seeded trials");
    cmd->add_option("--threads", f.threads, "Worker threads (0 = all cores)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*sanitize) return RunSanitize(f);
    if (*quantiles) return RunQuantiles(f);
    if (*eval) return RunEval(f);
    if (*calibrate) return RunCalibrate(f);
  } catch (const CliError& e) {
    std::cerr << "error: " << e.status().message() << '\n';
    return e.code();
  }
  return kExitConfig;
}

}  // namespace
}  // namespace streamsan

int main(int argc, char** argv) { return streamsan::Main(argc, argv); }
