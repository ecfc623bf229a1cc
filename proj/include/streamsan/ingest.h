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

// Line-oriented ingestion of raw numeric records into domain indices.

#ifndef STREAMSAN_INGEST_H_
#define STREAMSAN_INGEST_H_

#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "streamsan/core.h"

namespace streamsan {

struct IngestOptions {
  // Zero-based CSV column to read. Unset means one number per line.
  std::optional<int> csv_column;
  char delimiter = ',';
  // Skip the first line of the input.
  bool has_header = false;
  // Skip malformed records and clamp out-of-range values instead of failing.
  bool lenient = false;
};

// Pulls one record at a time from a stream; memory use is one line.
class RecordReader {
 public:
  RecordReader(std::istream& in, const Domain& domain, IngestOptions options)
      : in_(in), domain_(domain), options_(options) {}

  // Next quantized record, or nullopt at end of input. In strict mode the
  // first malformed or out-of-range record is an error naming its line.
  absl::StatusOr<std::optional<Index>> Next();

  int64_t line_number() const { return line_number_; }
  int64_t records() const { return records_; }
  int64_t skipped_malformed() const { return skipped_malformed_; }
  int64_t clamped() const { return clamped_; }

 private:
  std::istream& in_;
  Domain domain_;
  IngestOptions options_;
  std::string line_;
  int64_t line_number_ = 0;
  int64_t records_ = 0;
  int64_t skipped_malformed_ = 0;
  int64_t clamped_ = 0;
};

// Reads the whole input. Errors with "empty stream" if no record was read.
absl::StatusOr<std::vector<Index>> IngestAll(std::istream& in,
                                             const Domain& domain,
                                             const IngestOptions& options);

}  // namespace streamsan

#endif  // STREAMSAN_INGEST_H_
