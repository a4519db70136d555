//
// Copyright 2026 The fedvt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#ifndef FEDVT_REPORTS_H_
#define FEDVT_REPORTS_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace fedvt {

inline constexpr int kReportSchemaVersion = 1;
inline constexpr std::string_view kToolVersion = "0.1.0";

// Shortest representation that parses back to the same double.
std::string FormatDouble(double value);

// A CSV table. Every row carries schema_version as its first column.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns);

  void AddRow(std::vector<std::string> cells);
  std::size_t size() const { return rows_.size(); }
  std::string ToString() const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

// Writes to a sibling temporary file and renames it into place.
void WriteFileAtomic(const std::string& path, std::string_view contents);

std::string ReadFile(const std::string& path);

struct RunManifest {
  std::string command;
  std::string tool_version = std::string(kToolVersion);
  std::uint64_t scenario_hash = 0;
  std::uint64_t master_seed = 0;
  std::string started_at;
  std::string finished_at;
  std::vector<std::string> outputs;
  int exit_code = 0;
};

std::string ManifestToJson(const RunManifest& manifest);
std::string UtcTimestamp();

}  // namespace fedvt

#endif  // FEDVT_REPORTS_H_
