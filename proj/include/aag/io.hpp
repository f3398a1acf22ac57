#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

namespace aag {

using Json = nlohmann::ordered_json;

std::string read_text_file(const std::filesystem::path& path);
// Writes via a sibling temp file and rename, so readers never see partial output.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
// Parses JSON, reporting syntax errors as ParseError with a line number.
Json parse_json(const std::string& text, const std::string& origin);
Json load_json(const std::filesystem::path& path);

// Field accessors that raise ParseError naming the field path.
const Json& require_field(const Json& obj, const char* key, const std::string& path);
std::string require_string(const Json& obj, const char* key, const std::string& path);
void require_object(const Json& j, const std::string& path);
void require_array(const Json& j, const std::string& path);
// Requires `format` to equal `expected` when present.
void check_format(const Json& doc, const std::string& expected, const std::string& origin);

}  // namespace aag
