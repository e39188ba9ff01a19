#include "mirrorwm/io.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <stdexcept>

namespace mirrorwm {

namespace {

nlohmann::json to_json(const DatasetRecord& rec) {
  nlohmann::json j;
  j["tokens"] = rec.tokens;
  j["msg"] = rec.msg;
  j["params_digest"] = rec.params_digest;
  j["seed"] = rec.seed;
  if (!rec.positions.empty()) j["positions"] = rec.positions;
  if (!rec.u.empty()) j["u"] = rec.u;
  return j;
}

DatasetRecord from_json(const nlohmann::json& j) {
  DatasetRecord rec;
  rec.tokens = j.at("tokens").get<std::vector<std::int64_t>>();
  rec.msg = j.at("msg").get<std::vector<int>>();
  rec.params_digest = j.at("params_digest").get<std::string>();
  rec.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("positions")) rec.positions = j["positions"].get<std::vector<int>>();
  if (j.contains("u")) rec.u = j["u"].get<std::vector<double>>();
  return rec;
}

}  // namespace

void write_jsonl(const std::string& path, std::span<const DatasetRecord> records) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_jsonl: cannot open " + path);
  for (const auto& rec : records) {
    out << to_json(rec).dump() << '\n';
  }
  if (!out) throw std::runtime_error("write_jsonl: write failed for " + path);
}

std::vector<DatasetRecord> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_jsonl: cannot open " + path);
  std::vector<DatasetRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    records.push_back(from_json(nlohmann::json::parse(line)));
  }
  return records;
}

std::string digest16(const std::string& payload) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(payload.data(), payload.size(), md, &len, EVP_sha256(),
                 nullptr) != 1 ||
      len < 8) {
    throw std::runtime_error("digest16: SHA-256 failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 0; i < 8; ++i) {
    out[2 * i] = hex[md[i] >> 4];
    out[2 * i + 1] = hex[md[i] & 0xF];
  }
  return out;
}

std::string format_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void write_csv(const std::string& path, std::span<const std::string> header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_csv: cannot open " + path);
  for (std::size_t i = 0; i < header.size(); ++i) {
    out << header[i] << (i + 1 < header.size() ? "," : "\n");
  }
  for (const auto& row : rows) {
    if (row.size() != header.size()) {
      throw std::invalid_argument("write_csv: row width mismatch");
    }
    for (std::size_t i = 0; i < row.size(); ++i) {
      out << row[i] << (i + 1 < row.size() ? "," : "\n");
    }
  }
  if (!out) throw std::runtime_error("write_csv: write failed for " + path);
}

}  // namespace mirrorwm
