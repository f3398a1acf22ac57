#include <regex>

#include "aag/error.hpp"
#include "aag/statements.hpp"

namespace aag {

StatementTemplate parse_statement_template(const Json& j, const std::string& origin) {
  require_object(j, origin);
  StatementTemplate t;
  t.id = require_string(j, "id", origin);
  auto path = origin + "/" + t.id;
  t.text = require_string(j, "text", path);
  if (j.contains("null_text")) t.null_text = require_string(j, "null_text", path);
  if (j.contains("rows")) {
    auto r = require_string(j, "rows", path);
    if (r == "one") t.rows = RowShape::One;
    else if (r == "many") t.rows = RowShape::Many;
    else throw Error(ErrorCode::ParseError, "rows must be \"one\" or \"many\"", path + ".rows");
  }
  for (const auto* text : {&t.text, t.null_text ? &*t.null_text : nullptr}) {
    if (!text) continue;
    int depth = 0;
    for (char c : *text) {
      depth += c == '{' ? 1 : c == '}' ? -1 : 0;
      if (depth < 0 || depth > 1) throw Error(ErrorCode::ParseError, "unbalanced braces", path);
    }
    if (depth) throw Error(ErrorCode::ParseError, "unbalanced braces", path);
    if (text->empty() || text->back() != '.') throw Error(ErrorCode::ParseError, "statement must end with a period", path);
  }
  return t;
}

std::map<std::string, StatementTemplate> load_statement_templates(const std::filesystem::path& path) {
  auto doc = load_json(path);
  auto origin = path.filename().string();
  check_format(doc, "statement_template_v1", origin);
  const auto& list = require_field(doc, "statements", origin);
  require_array(list, origin + "/statements");
  std::map<std::string, StatementTemplate> out;
  for (const auto& j : list) {
    auto t = parse_statement_template(j, origin);
    if (out.count(t.id)) throw Error(ErrorCode::ParseError, "duplicate statement id '" + t.id + "'", origin);
    out.emplace(t.id, std::move(t));
  }
  return out;
}

Json statement_template_to_json(const StatementTemplate& t) {
  Json j{{"id", t.id}, {"text", t.text}};
  if (t.rows == RowShape::Many) j["rows"] = "many";
  if (t.null_text) j["null_text"] = *t.null_text;
  return j;
}

std::vector<std::string> placeholders(const std::string& text) {
  static const std::regex re(R"(\{([^{}]*)\})");
  std::vector<std::string> out;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), re); it != std::sregex_iterator(); ++it) {
    out.push_back((*it)[1]);
  }
  return out;
}

namespace {

struct Placeholder {
  enum Kind { Input, Value, Number, Flag, List } kind = Input;
  std::string name;
  std::size_t col = 0, col2 = 0;
  std::string yes, no;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t p = 0;
  while (true) {
    auto q = s.find(sep, p);
    out.push_back(s.substr(p, q == std::string::npos ? std::string::npos : q - p));
    if (q == std::string::npos) return out;
    p = q + 1;
  }
}

std::size_t column_arg(const std::string& s, const ResultSet& rs, const std::string& where) {
  std::size_t idx = 0;
  try {
    std::size_t used = 0;
    idx = std::stoul(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::ParseError, "bad column index '" + s + "'", where);
  }
  if (idx >= rs.columns.size()) {
    throw Error(ErrorCode::MissingColumn,
                "column " + s + " requested, result has " + std::to_string(rs.columns.size()), where);
  }
  return idx;
}

Placeholder parse_placeholder(const std::string& body, const ResultSet& rs, const std::string& where) {
  Placeholder p;
  auto colon = body.find(':');
  if (colon == std::string::npos) {
    p.name = body;
    return p;
  }
  auto kind = body.substr(0, colon);
  auto rest = body.substr(colon + 1);
  if (kind == "value" || kind == "number") {
    p.kind = kind == "value" ? Placeholder::Value : Placeholder::Number;
    p.col = column_arg(rest, rs, where);
  } else if (kind == "flag") {
    auto parts = split(rest, '|');
    if (parts.size() != 3) throw Error(ErrorCode::ParseError, "flag needs {flag:N|yes|no}", where);
    p.kind = Placeholder::Flag;
    p.col = column_arg(parts[0], rs, where);
    p.yes = parts[1];
    p.no = parts[2];
  } else if (kind == "list") {
    auto parts = split(rest, ':');
    if (parts.size() != 2) throw Error(ErrorCode::ParseError, "list needs {list:N:M}", where);
    p.kind = Placeholder::List;
    p.col = column_arg(parts[0], rs, where);
    p.col2 = column_arg(parts[1], rs, where);
  } else {
    throw Error(ErrorCode::ParseError, "unknown placeholder kind '" + kind + "'", where);
  }
  return p;
}

class Renderer {
 public:
  Renderer(const StatementTemplate& t, const ResultSet& rs, const StatementInputs& in) : t_(t), rs_(rs), in_(in) {}

  FactStatement run() {
    FactStatement f;
    f.source_plan = t_.id;
    bool many = t_.rows == RowShape::Many;
    bool empty = rs_.rows.empty();
    if (!many && rs_.rows.size() > 1) {
      throw Error(ErrorCode::UnexpectedRowCount, "expected 1 row, got " + std::to_string(rs_.rows.size()), t_.id);
    }
    if (empty && !t_.null_text) {
      throw Error(ErrorCode::UnexpectedRowCount, std::string("expected ") + (many ? "at least 1 row" : "1 row") + ", got 0",
                  t_.id);
    }
    const std::string* text = &t_.text;
    if (empty || (!many && has_null(t_.text))) {
      if (t_.null_text) text = &*t_.null_text;
    }
    f.text = fill(*text, f.values);
    for (const auto& v : in_.values) f.values.push_back(v);
    if (f.text.find_first_of("{}") != std::string::npos) {
      throw Error(ErrorCode::ParseError, "residual braces in rendered statement", t_.id);
    }
    return f;
  }

 private:
  bool has_null(const std::string& text) const {
    for (const auto& body : placeholders(text)) {
      auto p = parse_placeholder(body, rs_, t_.id);
      if (p.kind == Placeholder::Input || p.kind == Placeholder::List) continue;
      if (is_null(rs_.rows[0][p.col])) return true;
    }
    return false;
  }

  std::string fill(const std::string& text, std::vector<TypedValue>& audit) const {
    static const std::regex re(R"(\{([^{}]*)\})");
    std::string out;
    auto last = text.cbegin();
    for (auto it = std::sregex_iterator(text.begin(), text.end(), re); it != std::sregex_iterator(); ++it) {
      out.append(last, text.cbegin() + it->position());
      out += expand(parse_placeholder((*it)[1], rs_, t_.id), audit);
      last = text.cbegin() + it->position() + it->length();
    }
    out.append(last, text.cend());
    return out;
  }

  std::string expand(const Placeholder& p, std::vector<TypedValue>& audit) const {
    if (p.kind == Placeholder::Input) {
      auto it = in_.text.find(p.name);
      if (it == in_.text.end()) throw Error(ErrorCode::UnboundSlot, "no input for {" + p.name + "}", t_.id);
      return it->second;
    }
    if (p.kind == Placeholder::List) {
      std::vector<std::string> items;
      for (std::size_t r = 0; r < rs_.rows.size(); ++r) {
        auto a = rs_.typed(r, p.col);
        auto b = rs_.typed(r, p.col2);
        audit.push_back(a);
        audit.push_back(b);
        items.push_back(format_value(a) + " (" + format_with_units(b) + ")");
      }
      return join_list(items);
    }
    if (rs_.rows.empty()) return "unknown";
    auto v = rs_.typed(0, p.col);
    audit.push_back(v);
    if (p.kind == Placeholder::Flag) {
      if (is_null(v.value)) return "unknown";
      auto d = as_double(v.value);
      bool yes = std::holds_alternative<bool>(v.value) ? std::get<bool>(v.value) : (d && *d != 0.0);
      return yes ? p.yes : p.no;
    }
    return p.kind == Placeholder::Value ? format_with_units(v) : format_value(v);
  }

  const StatementTemplate& t_;
  const ResultSet& rs_;
  const StatementInputs& in_;
};

}  // namespace

FactStatement render_statement(const StatementTemplate& tmpl, const ResultSet& result, const StatementInputs& inputs) {
  return Renderer(tmpl, result, inputs).run();
}

std::string render_table(const ResultSet& result) {
  std::vector<std::string> head;
  for (const auto& c : result.columns) {
    auto h = title_case(c.nicename.empty() ? c.name : c.nicename);
    if (c.units) h += " (" + (is_percent(c.units) ? std::string("%") : c.units->plural) + ")";
    head.push_back(h);
  }
  auto line = [](const std::vector<std::string>& cells) {
    std::string s;
    for (std::size_t i = 0; i < cells.size(); ++i) s += (i ? " | " : "") + cells[i];
    return s;
  };
  std::string out = line(head);
  for (std::size_t r = 0; r < result.rows.size(); ++r) {
    std::vector<std::string> cells;
    for (std::size_t c = 0; c < result.columns.size(); ++c) cells.push_back(format_value(result.typed(r, c)));
    out += "\n" + line(cells);
  }
  return out;
}

}  // namespace aag
