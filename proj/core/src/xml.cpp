#include "resolvit/xml.hpp"

#include "resolvit/errors.hpp"

namespace resolvit::xml {

namespace {

[[noreturn]] void fail(const std::string &why) {
  throw Error(Errc::MalformedDocument, why);
}

struct Parser {
  std::string_view in;
  size_t pos = 0;

  bool eof() const { return pos >= in.size(); }
  char peek() const { return in[pos]; }

  void skip_ws() {
    while (!eof() && (in[pos] == ' ' || in[pos] == '\t' || in[pos] == '\n' ||
                      in[pos] == '\r'))
      ++pos;
  }

  void skip_misc() {
    for (;;) {
      skip_ws();
      if (in.compare(pos, 4, "<!--") == 0) {
        auto end = in.find("-->", pos + 4);
        if (end == std::string_view::npos)
          fail("unterminated comment");
        pos = end + 3;
      } else if (in.compare(pos, 2, "<?") == 0) {
        auto end = in.find("?>", pos + 2);
        if (end == std::string_view::npos)
          fail("unterminated processing instruction");
        pos = end + 2;
      } else {
        return;
      }
    }
  }

  bool name_char(char c) const {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
           (c >= '0' && c <= '9') || c == '-' || c == '_' || c == '.' ||
           c == ':';
  }

  std::string read_name() {
    size_t start = pos;
    while (!eof() && name_char(peek()))
      ++pos;
    if (pos == start)
      fail("expected a name at offset " + std::to_string(pos));
    return std::string(in.substr(start, pos - start));
  }

  std::string read_attr_value() {
    if (eof() || peek() != '"')
      fail("attribute value must be double-quoted");
    ++pos;
    std::string value;
    while (!eof() && peek() != '"') {
      char c = in[pos];
      if (c == '<')
        fail("'<' inside attribute value");
      if (c == '&') {
        auto semi = in.find(';', pos);
        if (semi == std::string_view::npos)
          fail("unterminated entity");
        std::string_view ent = in.substr(pos + 1, semi - pos - 1);
        if (ent == "amp")
          value += '&';
        else if (ent == "lt")
          value += '<';
        else if (ent == "gt")
          value += '>';
        else if (ent == "quot")
          value += '"';
        else if (ent == "apos")
          value += '\'';
        else
          fail("unknown entity '&" + std::string(ent) + ";'");
        pos = semi + 1;
      } else {
        value += c;
        ++pos;
      }
    }
    if (eof())
      fail("unterminated attribute value");
    ++pos; // closing quote
    return value;
  }

  Element read_element() {
    if (eof() || peek() != '<')
      fail("expected '<'");
    ++pos;
    Element el;
    el.name = read_name();
    for (;;) {
      skip_ws();
      if (eof())
        fail("unterminated start tag <" + el.name + ">");
      if (peek() == '/') {
        ++pos;
        if (eof() || peek() != '>')
          fail("malformed empty-element tag");
        ++pos;
        return el;
      }
      if (peek() == '>') {
        ++pos;
        break;
      }
      std::string key = read_name();
      for (const auto &[k, v] : el.attrs)
        if (k == key)
          fail("duplicate attribute '" + key + "'");
      skip_ws();
      if (eof() || peek() != '=')
        fail("expected '=' after attribute name");
      ++pos;
      skip_ws();
      el.attrs.emplace_back(std::move(key), read_attr_value());
    }
    // Content: child elements separated by whitespace/comments only.
    for (;;) {
      skip_misc();
      if (eof())
        fail("unterminated element <" + el.name + ">");
      if (peek() != '<')
        fail("text content is not allowed in <" + el.name + ">");
      if (in.compare(pos, 2, "</") == 0) {
        pos += 2;
        std::string closing = read_name();
        if (closing != el.name)
          fail("mismatched closing tag </" + closing + "> for <" + el.name + ">");
        skip_ws();
        if (eof() || peek() != '>')
          fail("malformed closing tag");
        ++pos;
        return el;
      }
      el.children.push_back(read_element());
    }
  }
};

} // namespace

const std::string *Element::attr(std::string_view key) const {
  for (const auto &[k, v] : attrs)
    if (k == key)
      return &v;
  return nullptr;
}

Element parse(std::string_view document) {
  Parser p{document};
  p.skip_misc();
  if (p.eof())
    fail("empty document");
  Element root = p.read_element();
  p.skip_misc();
  if (!p.eof())
    fail("trailing content after document element");
  return root;
}

std::string escape_attr(std::string_view value) {
  std::string out;
  out.reserve(value.size());
  for (char c : value) {
    switch (c) {
    case '&':
      out += "&amp;";
      break;
    case '<':
      out += "&lt;";
      break;
    case '>':
      out += "&gt;";
      break;
    case '"':
      out += "&quot;";
      break;
    default:
      out += c;
    }
  }
  return out;
}

} // namespace resolvit::xml
