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

#include "fedvt/reports.h"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <utility>

#include "fedvt/error.h"
#include "json.hpp"

namespace fedvt {
namespace {

std::string EscapeCsv(const std::string& cell) {
  if (cell.find_first_of(",\"\n") == std::string::npos) return cell;
  std::string out = "\"";
  for (char c : cell) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string HexHash(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

std::string FormatDouble(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, result.ptr);
}

CsvTable::CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

void CsvTable::AddRow(std::vector<std::string> cells) {
  if (cells.size() != columns_.size()) {
    throw Error(ErrorCode::kInvalidInput, "CSV row width does not match the header");
  }
  rows_.push_back(std::move(cells));
}

std::string CsvTable::ToString() const {
  std::ostringstream out;
  out << "schema_version";
  for (const auto& c : columns_) out << ',' << EscapeCsv(c);
  out << '\n';
  for (const auto& row : rows_) {
    out << kReportSchemaVersion;
    for (const auto& cell : row) out << ',' << EscapeCsv(cell);
    out << '\n';
  }
  return out.str();
}

void WriteFileAtomic(const std::string& path, std::string_view contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error(ErrorCode::kInvalidInput, "cannot write " + tmp.string());
  }
  fs::rename(tmp, target);
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kInvalidParameter, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string UtcTimestamp() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string ManifestToJson(const RunManifest& m) {
  nlohmann::json j;
  j["schema_version"] = kReportSchemaVersion;
  j["command"] = m.command;
  j["tool_version"] = m.tool_version;
  j["scenario_hash"] = HexHash(m.scenario_hash);
  j["master_seed"] = m.master_seed;
  j["seed_derivation"] = {
      {"trial", "DeriveSeed(master, {4, i})"},
      {"client_data", "DeriveSeed(trial, {1, l})"},
      {"client_mechanism", "DeriveSeed(trial, {2, l, t, 0})"},
      {"public_randomness", "DeriveSeed(trial, {3})"},
      {"prior", "DeriveSeed(trial, {5})"},
      {"escalation", "DeriveSeed(master, {0xe5ca1a7e}) then per-trial as above"}};
  j["started_at"] = m.started_at;
  j["finished_at"] = m.finished_at;
  j["outputs"] = m.outputs;
  j["exit_code"] = m.exit_code;
  return j.dump(2);
}

}  // namespace fedvt
