#include <cctype>
#include <memory>
#include <variant>

#include <fmt/format.h>

#include "deckard/errors.hpp"
#include "deckard/hypothesis.hpp"

namespace deckard {

namespace {

struct Value;
using List = std::vector<Value>;
using Dict = std::vector<std::pair<std::string, Value>>;

struct None {};

struct Value {
  std::variant<None, bool, long long, std::string, List, Dict> v;
  int line = 0;
};

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  std::size_t pos() const { return pos_; }
  bool at_end() { skip_ws(); return pos_ >= text_.size(); }
  int line() const { return line_at(pos_); }

  int line_at(std::size_t p) const {
    int line = 1;
    for (std::size_t i = 0; i < p && i < text_.size(); ++i) line += text_[i] == '\n';
    return line;
  }

  int column_at(std::size_t p) const {
    int col = 1;
    for (std::size_t i = 0; i < p && i < text_.size(); ++i) col = text_[i] == '\n' ? 1 : col + 1;
    return col;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(what, line_at(pos_), column_at(pos_));
  }

  void skip_ws() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  bool consume(char c) {
    if (peek() != c) return false;
    ++pos_;
    return true;
  }

  void expect(char c) {
    if (!consume(c)) fail(fmt::format("expected '{}'", c));
  }

  // Skips an optional `identifier =` assignment prefix.
  void skip_assignment() {
    skip_ws();
    std::size_t save = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      ++pos_;
    }
    if (pos_ > save && consume('=')) return;
    pos_ = save;
  }

  std::string string_literal() {
    char q = peek();
    if (q != '"' && q != '\'') fail("expected string");
    ++pos_;
    std::string out;
    while (true) {
      if (pos_ >= text_.size()) fail("unterminated string");
      char c = text_[pos_++];
      if (c == q) break;
      if (c == '\n') fail("newline in string");
      if (c == '\\') {
        if (pos_ >= text_.size()) fail("unterminated escape");
        char e = text_[pos_++];
        switch (e) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          default: out += e;
        }
      } else {
        out += c;
      }
    }
    return out;
  }

  Value value() {
    char c = peek();
    Value out;
    out.line = line();
    if (c == '{') {
      ++pos_;
      Dict d;
      while (!consume('}')) {
        std::string key = string_literal();
        expect(':');
        d.emplace_back(std::move(key), value());
        if (!consume(',')) {
          expect('}');
          break;
        }
      }
      out.v = std::move(d);
    } else if (c == '[') {
      ++pos_;
      List l;
      while (!consume(']')) {
        l.push_back(value());
        if (!consume(',')) {
          expect(']');
          break;
        }
      }
      out.v = std::move(l);
    } else if (c == '"' || c == '\'') {
      out.v = string_literal();
    } else if (c == '-' || std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t start = pos_++;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      std::string digits(text_.substr(start, pos_ - start));
      if (digits == "-") fail("expected digits");
      out.v = std::stoll(digits);
    } else if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < text_.size() && std::isalpha(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      std::string_view word = text_.substr(start, pos_ - start);
      if (word == "True" || word == "true") {
        out.v = true;
      } else if (word == "False" || word == "false") {
        out.v = false;
      } else if (word == "None" || word == "none" || word == "null") {
        out.v = None{};
      } else {
        pos_ = start;
        fail("unexpected identifier '" + std::string(word) + "'");
      }
    } else if (c == '\0') {
      fail("unexpected end of document");
    } else {
      fail(fmt::format("unexpected character '{}'", c));
    }
    return out;
  }

  // After a failed entry, advances past the rest of that value so the next
  // top-level key can be read. Returns false at end of input.
  bool resync(std::size_t from) {
    pos_ = from;
    int depth = 0;
    char quote = 0;
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (quote) {
        if (c == '\\') {
          ++pos_;
        } else if (c == quote || c == '\n') {
          quote = 0;
        }
      } else if (c == '"' || c == '\'') {
        quote = c;
      } else if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
        continue;
      } else if (c == '{' || c == '[') {
        ++depth;
      } else if (c == '}' || c == ']') {
        if (depth == 0) return true;  // closes the top-level dictionary
        --depth;
      } else if (c == ',' && depth == 0) {
        ++pos_;
        return true;
      }
      ++pos_;
    }
    return false;
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
};

const Value* find(const Dict& d, std::string_view key) {
  for (const auto& [k, v] : d) {
    if (k == key) return &v;
  }
  return nullptr;
}

struct EntryError {
  std::string reason;
};

bool as_bool(const Value* v, std::string_view field) {
  if (!v || std::holds_alternative<None>(v->v)) return false;
  if (auto b = std::get_if<bool>(&v->v)) return *b;
  if (auto s = std::get_if<std::string>(&v->v)) {
    if (*s == "True" || *s == "true") return true;
    if (*s == "False" || *s == "false") return false;
  }
  throw EntryError{fmt::format("field '{}' is not a boolean", field)};
}

int as_quantity(const Value& v) {
  long long q = 0;
  if (auto i = std::get_if<long long>(&v.v)) {
    q = *i;
  } else if (auto s = std::get_if<std::string>(&v.v)) {
    try {
      std::size_t used = 0;
      q = std::stoll(*s, &used);
      if (used != s->size()) throw EntryError{"quantity '" + *s + "' is not an integer"};
    } catch (const std::logic_error&) {
      throw EntryError{"quantity '" + *s + "' is not an integer"};
    }
  } else {
    throw EntryError{"quantity is not an integer"};
  }
  if (q <= 0 || q > 1'000'000) throw EntryError{fmt::format("quantity {} out of range", q)};
  return static_cast<int>(q);
}

ParsedEntry to_entry(const std::string& key, const Value& value) {
  const Dict* d = std::get_if<Dict>(&value.v);
  if (!d) throw EntryError{"entry is not a dictionary"};
  ParsedEntry e;
  e.item = canonical_item_name(key);
  if (e.item.empty()) throw EntryError{"empty item name"};
  e.requires_crafting_table = as_bool(find(*d, "requires_crafting_table"), "requires_crafting_table");
  e.requires_furnace = as_bool(find(*d, "requires_furnace"), "requires_furnace");
  if (const Value* t = find(*d, "required_tool"); t && !std::holds_alternative<None>(t->v)) {
    const std::string* s = std::get_if<std::string>(&t->v);
    if (!s) throw EntryError{"required_tool is not a string"};
    std::string tool = canonical_item_name(*s);
    if (!tool.empty() && tool != "none") e.required_tool = tool;
  }
  const Value* r = find(*d, "recipe");
  if (!r) throw EntryError{"missing recipe"};
  const List* list = std::get_if<List>(&r->v);
  if (!list) throw EntryError{"recipe is not a list"};
  for (const auto& ing : *list) {
    const Dict* id = std::get_if<Dict>(&ing.v);
    if (!id) throw EntryError{"recipe ingredient is not a dictionary"};
    const Value* name = find(*id, "item");
    const Value* qty = find(*id, "quantity");
    if (!name || !std::holds_alternative<std::string>(name->v)) {
      throw EntryError{"recipe ingredient without item name"};
    }
    if (!qty) throw EntryError{"recipe ingredient without quantity"};
    std::string n = canonical_item_name(std::get<std::string>(name->v));
    if (n.empty()) throw EntryError{"empty ingredient name"};
    e.recipe.push_back({n, as_quantity(*qty)});
  }
  return e;
}

}  // namespace

std::string canonical_item_name(std::string_view raw) {
  std::size_t b = 0;
  std::size_t eidx = raw.size();
  while (b < eidx && std::isspace(static_cast<unsigned char>(raw[b]))) ++b;
  while (eidx > b && std::isspace(static_cast<unsigned char>(raw[eidx - 1]))) --eidx;
  std::string out;
  for (char c : raw.substr(b, eidx - b)) {
    if (c == ' ' || c == '-') {
      out += '_';
    } else if (c == ':' ) {
      out.clear();  // drop namespace prefixes such as "minecraft:"
    } else {
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  return out;
}

RecipeDictParse parse_recipe_dict(std::string_view text) {
  Lexer lex(text);
  lex.skip_assignment();
  lex.expect('{');
  RecipeDictParse out;
  while (true) {
    if (lex.consume('}')) break;
    if (lex.at_end()) {
      // Truncated document: keep what was read.
      out.skipped.push_back({"", "document truncated before closing brace", lex.line()});
      break;
    }
    int line = lex.line();
    std::string key = lex.string_literal();
    lex.expect(':');
    std::size_t value_start = lex.pos();
    Value v;
    try {
      v = lex.value();
    } catch (const ParseError& e) {
      out.skipped.push_back({key, e.what(), line});
      if (!lex.resync(value_start)) break;
      continue;
    }
    try {
      out.entries.push_back(to_entry(key, v));
    } catch (const EntryError& e) {
      out.skipped.push_back({key, e.reason, line});
    }
    if (lex.consume(',')) continue;
    char next = lex.peek();
    if (next == '"' || next == '\'') continue;  // tolerate a missing separator
    if (next == '}' || next == '\0') continue;
    lex.fail("expected ',' or '}' after entry");
  }
  return out;
}

std::string serialize_recipe_dict(const std::vector<ParsedEntry>& entries,
                                  std::string_view variable) {
  auto py_bool = [](bool b) { return b ? "True" : "False"; };
  std::string out = fmt::format("{} = {{\n", variable);
  for (const auto& e : entries) {
    out += fmt::format("    \"{}\": {{\n", e.item);
    out += fmt::format("        \"requires_crafting_table\": {},\n", py_bool(e.requires_crafting_table));
    out += fmt::format("        \"requires_furnace\": {},\n", py_bool(e.requires_furnace));
    out += fmt::format("        \"required_tool\": {},\n",
                       e.required_tool ? "\"" + *e.required_tool + "\"" : std::string("None"));
    if (e.recipe.empty()) {
      out += "        \"recipe\": []\n";
    } else {
      out += "        \"recipe\": [\n";
      for (std::size_t i = 0; i < e.recipe.size(); ++i) {
        out += fmt::format("            {{\n                \"item\": \"{}\",\n"
                           "                \"quantity\": \"{}\"\n            }}{}\n",
                           e.recipe[i].item, e.recipe[i].quantity,
                           i + 1 < e.recipe.size() ? "," : "");
      }
      out += "        ]\n";
    }
    out += "    },\n";
  }
  out += "}\n";
  return out;
}

}  // namespace deckard
