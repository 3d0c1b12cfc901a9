#include "pool/xml.hpp"

#include <cctype>

#include "pool/errors.hpp"

namespace pool::xml {

namespace {

void append_escaped(std::string& out, std::string_view value) {
  for (char c : value) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
}

std::string unescape(std::string_view value) {
  std::string out;
  out.reserve(value.size());
  std::size_t i = 0;
  while (i < value.size()) {
    if (value[i] != '&') {
      out += value[i++];
      continue;
    }
    const auto end = value.find(';', i);
    if (end == std::string_view::npos) throw ParseError("unterminated entity");
    const std::string_view entity = value.substr(i + 1, end - i - 1);
    if (entity == "amp") out += '&';
    else if (entity == "lt") out += '<';
    else if (entity == "gt") out += '>';
    else if (entity == "quot") out += '"';
    else if (entity == "apos") out += '\'';
    else throw ParseError("unknown entity &" + std::string(entity) + ";");
    i = end + 1;
  }
  return out;
}

void write_element(std::string& out, const Element& e, int depth) {
  const std::string indent(static_cast<std::size_t>(depth) * 2, ' ');
  out += indent;
  out += '<';
  out += e.name;
  for (const auto& [k, v] : e.attributes) {
    out += ' ';
    out += k;
    out += "=\"";
    append_escaped(out, v);
    out += '"';
  }
  if (e.children.empty() && e.text.empty()) {
    out += "/>\n";
    return;
  }
  out += '>';
  if (e.children.empty()) {
    append_escaped(out, e.text);
    out += "</";
    out += e.name;
    out += ">\n";
    return;
  }
  out += '\n';
  for (const auto& child : e.children) write_element(out, child, depth + 1);
  out += indent;
  out += "</";
  out += e.name;
  out += ">\n";
}

struct Parser {
  std::string_view input;
  std::size_t pos = 0;

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(what + " at offset " + std::to_string(pos));
  }

  bool done() const { return pos >= input.size(); }
  char peek() const { return input[pos]; }

  void skip_whitespace() {
    while (!done() && std::isspace(static_cast<unsigned char>(peek()))) ++pos;
  }

  bool consume(std::string_view token) {
    if (input.substr(pos, token.size()) != token) return false;
    pos += token.size();
    return true;
  }

  std::string read_name() {
    const std::size_t start = pos;
    while (!done()) {
      const char c = peek();
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' ||
          c == ':' || c == '.') {
        ++pos;
      } else {
        break;
      }
    }
    if (pos == start) fail("expected a name");
    return std::string(input.substr(start, pos - start));
  }

  void skip_declaration() {
    skip_whitespace();
    if (consume("<?")) {
      const auto end = input.find("?>", pos);
      if (end == std::string_view::npos) fail("unterminated XML declaration");
      pos = end + 2;
    }
  }

  Element parse_element() {
    skip_whitespace();
    if (done() || !consume("<")) fail("expected '<'");
    Element e;
    e.name = read_name();
    while (true) {
      skip_whitespace();
      if (done()) fail("unterminated start tag");
      if (consume("/>")) return e;
      if (consume(">")) break;
      // attribute
      std::string attr = read_name();
      skip_whitespace();
      if (!consume("=")) fail("expected '=' after attribute name");
      skip_whitespace();
      if (done() || peek() != '"') fail("expected '\"'");
      ++pos;
      const auto end = input.find('"', pos);
      if (end == std::string_view::npos) fail("unterminated attribute value");
      e.attributes.emplace_back(std::move(attr),
                                unescape(input.substr(pos, end - pos)));
      pos = end + 1;
    }

    // content: children or text
    std::string text;
    while (true) {
      if (done()) fail("unterminated element <" + e.name + ">");
      if (peek() == '<') {
        if (input.substr(pos, 2) == "</") {
          pos += 2;
          const std::string closing = read_name();
          if (closing != e.name) {
            fail("mismatched </" + closing + "> for <" + e.name + ">");
          }
          skip_whitespace();
          if (!consume(">")) fail("expected '>'");
          if (e.children.empty()) {
            // trim surrounding whitespace of text content
            const auto first = text.find_first_not_of(" \t\r\n");
            if (first == std::string::npos) {
              e.text.clear();
            } else {
              const auto last = text.find_last_not_of(" \t\r\n");
              e.text = unescape(
                  std::string_view(text).substr(first, last - first + 1));
            }
          }
          return e;
        }
        e.children.push_back(parse_element());
      } else {
        text += input[pos++];
      }
    }
  }
};

}  // namespace

const Element* Element::find(std::string_view child_name) const {
  for (const auto& child : children) {
    if (child.name == child_name) return &child;
  }
  return nullptr;
}

const std::string* Element::attribute(std::string_view attr_name) const {
  for (const auto& [k, v] : attributes) {
    if (k == attr_name) return &v;
  }
  return nullptr;
}

std::string serialize(const Element& root) {
  std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"yes\"?>\n";
  write_element(out, root, 0);
  return out;
}

Element parse(std::string_view input) {
  Parser p{input};
  p.skip_declaration();
  Element root = p.parse_element();
  p.skip_whitespace();
  if (!p.done()) p.fail("trailing content after document element");
  return root;
}

}  // namespace pool::xml
