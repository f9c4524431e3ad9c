#pragma once

#include "resolvit/model.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace resolvit {

// Strict parser: unknown elements or attributes are errors.
Descriptor parse_descriptor(std::string_view document);

// Canonical form: fixed attribute order, two-space indent, LF, UTF-8.
// parse_descriptor(serialize_descriptor(d)) == d, and equal values
// serialize byte-identically.
std::string serialize_descriptor(const Descriptor &d);

std::vector<IndexEntry> parse_repository_index(std::string_view document);
std::string serialize_repository_index(const std::vector<IndexEntry> &entries);

} // namespace resolvit
