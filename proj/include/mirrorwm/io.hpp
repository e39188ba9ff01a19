// Run artifacts: JSON-lines datasets, digest tags, and CSV metric tables.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mirrorwm {

struct DatasetRecord {
  std::vector<std::int64_t> tokens;
  std::vector<int> positions;  // per-token assignment, -1 where none; may be empty
  std::vector<double> u;       // recorded PRF draws for diagnostics; may be empty
  std::vector<int> msg;        // empty on null records
  std::string params_digest;   // 16 hex chars tying the record to its config
  std::uint64_t seed = 0;
};

void write_jsonl(const std::string& path, std::span<const DatasetRecord> records);
std::vector<DatasetRecord> read_jsonl(const std::string& path);

// First 16 hex chars of SHA-256 over the payload.
std::string digest16(const std::string& payload);

// Shortest round-trippable decimal form (%.17g).
std::string format_g17(double x);

void write_csv(const std::string& path, std::span<const std::string> header,
               const std::vector<std::vector<std::string>>& rows);

}  // namespace mirrorwm
