#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace resolvit::xml {

// Element tree for the restricted XML dialect used by descriptors and
// repository indexes: elements, double-quoted attributes, optional prolog
// and comments, whitespace-only text. Anything else is MalformedDocument.
struct Element {
  std::string name;
  std::vector<std::pair<std::string, std::string>> attrs; // document order
  std::vector<Element> children;

  const std::string *attr(std::string_view key) const;
};

Element parse(std::string_view document); // throws MalformedDocument

std::string escape_attr(std::string_view value);

} // namespace resolvit::xml
