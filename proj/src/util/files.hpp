#pragma once

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "sim2real/error.hpp"

namespace sim2real::util {

inline nlohmann::json ReadJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorKind::kIo, path + ": cannot open (" + std::strerror(errno) + ")");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorKind::kFormat, path + ": invalid JSON (" + e.what() + ")");
  }
}

inline void WriteTextFile(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    Fail(ErrorKind::kIo, path + ": cannot open for writing (" + std::strerror(errno) + ")");
  }
  out << text;
  if (!out) Fail(ErrorKind::kIo, path + ": write failed");
}

inline std::string ReadTextFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kIo, path + ": cannot open (" + std::strerror(errno) + ")");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Pretty JSON with a trailing newline; key order is nlohmann's sorted order,
// so output is byte-stable.
inline std::string DumpJson(const nlohmann::json& j) { return j.dump(2) + "\n"; }

}  // namespace sim2real::util
