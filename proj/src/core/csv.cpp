#include "aag/csv.hpp"

#include "aag/error.hpp"
#include "aag/io.hpp"

namespace aag {

CsvTable parse_csv(const std::string& text, const std::string& origin) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false, any = false;
  std::size_t line = 1;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      record.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\r') {
      continue;
    } else if (c == '\n') {
      if (any || !field.empty()) {
        record.push_back(std::move(field));
        records.push_back(std::move(record));
      }
      record.clear();
      field.clear();
      any = false;
      ++line;
    } else {
      field += c;
      any = true;
    }
  }
  if (quoted) throw Error(ErrorCode::ParseError, "unterminated quote (line " + std::to_string(line) + ")", origin);
  if (any || !field.empty()) {
    record.push_back(std::move(field));
    records.push_back(std::move(record));
  }
  if (records.empty()) throw Error(ErrorCode::ParseError, "missing header row", origin);
  CsvTable t;
  t.header = std::move(records.front());
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].size() != t.header.size()) {
      throw Error(ErrorCode::ParseError, "row " + std::to_string(i) + " has " + std::to_string(records[i].size()) +
                                             " fields, expected " + std::to_string(t.header.size()),
                  origin);
    }
    t.rows.push_back(std::move(records[i]));
  }
  return t;
}

CsvTable load_csv(const std::filesystem::path& path) { return parse_csv(read_text_file(path), path.string()); }

}  // namespace aag

namespace aag {

Value parse_cell(const std::string& cell, const std::string& storage_type, const std::string& origin) {
  if (cell.empty()) return std::monostate{};
  try {
    std::size_t used = 0;
    if (storage_type == "integer") {
      auto v = std::stoll(cell, &used);
      if (used == cell.size()) return static_cast<std::int64_t>(v);
    } else if (storage_type == "real") {
      auto v = std::stod(cell, &used);
      if (used == cell.size()) return v;
    } else {
      return cell;
    }
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::ParseError, "'" + cell + "' is not a valid " + storage_type, origin);
}

}  // namespace aag
