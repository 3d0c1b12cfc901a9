#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pool::xml {

// Just enough XML for the fixed envelope schema: elements, string attributes,
// child elements or text content. No namespaces, comments, or CDATA.
struct Element {
  std::string name;
  std::vector<std::pair<std::string, std::string>> attributes;
  std::vector<Element> children;
  std::string text;  // meaningful only for leaf elements

  const Element* find(std::string_view child_name) const;
  const std::string* attribute(std::string_view attr_name) const;
};

std::string serialize(const Element& root);  // with XML declaration
Element parse(std::string_view input);       // throws ParseError

}  // namespace pool::xml
