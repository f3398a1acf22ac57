#include "aag/io.hpp"

#include <fstream>
#include <sstream>
#include <unistd.h>

#include "aag/error.hpp"

namespace aag {

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw Error(ErrorCode::IoError, "write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::IoError, "cannot rename into " + path.string());
  }
}

Json parse_json(const std::string& text, const std::string& origin) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1;
    for (std::size_t i = 0; i < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') ++line;
    }
    throw Error(ErrorCode::ParseError, "malformed document (line " + std::to_string(line) + ")", origin);
  }
}

Json load_json(const std::filesystem::path& path) { return parse_json(read_text_file(path), path.string()); }

const Json& require_field(const Json& obj, const char* key, const std::string& path) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw Error(ErrorCode::ParseError, std::string("missing field '") + key + "'", path);
  }
  return obj.at(key);
}

std::string require_string(const Json& obj, const char* key, const std::string& path) {
  const auto& v = require_field(obj, key, path);
  if (!v.is_string()) throw Error(ErrorCode::ParseError, std::string("field '") + key + "' must be a string", path);
  return v.get<std::string>();
}

void require_object(const Json& j, const std::string& path) {
  if (!j.is_object()) throw Error(ErrorCode::ParseError, "expected an object", path);
}

void require_array(const Json& j, const std::string& path) {
  if (!j.is_array()) throw Error(ErrorCode::ParseError, "expected an array", path);
}

void check_format(const Json& doc, const std::string& expected, const std::string& origin) {
  require_object(doc, origin);
  if (doc.contains("format") && doc["format"] != expected) {
    throw Error(ErrorCode::ParseError, "expected format " + expected, origin);
  }
}

}  // namespace aag
