#pragma once

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "takens/errors.hpp"
#include "takens/numformat.hpp"

namespace takens {

/// One CSV table: header row plus stringified records.
class CsvTable {
public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  CsvTable& row(std::vector<std::string> cells) {
    rows_.push_back(std::move(cells));
    return *this;
  }

  std::string to_string() const {
    std::string s = join(header_);
    for (const auto& r : rows_) s += join(r);
    return s;
  }

  void write(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << to_string();
  }

  size_t size() const { return rows_.size(); }

private:
  static std::string join(const std::vector<std::string>& cells) {
    std::string s;
    for (size_t i = 0; i < cells.size(); ++i) {
      if (i) s += ",";
      s += cells[i];
    }
    s += "\n";
    return s;
  }

  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

inline std::string cell(double v) { return format_double(v); }
inline std::string cell(long long v) { return format_int(v); }
inline std::string cell(int v) { return format_int(v); }
inline std::string cell(bool v) { return v ? "1" : "0"; }

/// Output root: explicit override, then $TAKENS_OUT, then ./out.
inline std::filesystem::path output_root(const std::string& override_root) {
  if (!override_root.empty()) return override_root;
  if (const char* env = std::getenv("TAKENS_OUT"); env && *env) return env;
  return "out";
}

/// out/<op>/<timestamp>-<seed>/ with a counter suffix on collision.
inline std::filesystem::path make_run_dir(const std::filesystem::path& root, const std::string& op,
                                          std::uint64_t seed) {
  auto now = std::chrono::system_clock::now();
  std::time_t tt = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y%m%dT%H%M%S", &tm);
  std::filesystem::path base = root / op / (std::string(stamp) + "-" + std::to_string(seed));
  std::filesystem::path dir = base;
  for (int suffix = 1; std::filesystem::exists(dir); ++suffix) {
    dir = base;
    dir += "-" + std::to_string(suffix);
  }
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace takens
