#include "resolvit/version.hpp"

#include "resolvit/errors.hpp"

#include <charconv>

namespace resolvit {

namespace {

bool is_qualifier_char(char c) {
  return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
         (c >= '0' && c <= '9');
}

std::uint64_t parse_component(std::string_view text, std::string_view whole) {
  if (text.empty())
    throw Error(Errc::MalformedVersion, "empty version component in '" +
                                            std::string(whole) + "'");
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw Error(Errc::MalformedVersion, "non-numeric version component in '" +
                                            std::string(whole) + "'");
  return value;
}

} // namespace

int compare_versions(const Version &a, const Version &b) {
  if (a.major != b.major)
    return a.major < b.major ? -1 : 1;
  if (a.minor != b.minor)
    return a.minor < b.minor ? -1 : 1;
  if (a.micro != b.micro)
    return a.micro < b.micro ? -1 : 1;
  // Absent qualifier outranks any present qualifier.
  if (a.qualifier.empty() != b.qualifier.empty())
    return a.qualifier.empty() ? 1 : -1;
  int c = a.qualifier.compare(b.qualifier);
  return c < 0 ? -1 : c > 0 ? 1 : 0;
}

Version parse_version(std::string_view text) {
  Version v;
  std::string_view rest = text;
  std::string_view numeric = rest;
  if (auto dash = rest.find('-'); dash != std::string_view::npos) {
    numeric = rest.substr(0, dash);
    v.qualifier = std::string(rest.substr(dash + 1));
    if (v.qualifier.empty())
      throw Error(Errc::MalformedVersion,
                  "empty qualifier in '" + std::string(text) + "'");
    for (char c : v.qualifier)
      if (!is_qualifier_char(c))
        throw Error(Errc::MalformedVersion,
                    "invalid qualifier in '" + std::string(text) + "'");
  }
  auto first = numeric.find('.');
  auto second = first == std::string_view::npos ? std::string_view::npos
                                                : numeric.find('.', first + 1);
  if (first == std::string_view::npos || second == std::string_view::npos ||
      numeric.find('.', second + 1) != std::string_view::npos)
    throw Error(Errc::MalformedVersion,
                "version must have three components: '" + std::string(text) + "'");
  v.major = parse_component(numeric.substr(0, first), text);
  v.minor = parse_component(numeric.substr(first + 1, second - first - 1), text);
  v.micro = parse_component(numeric.substr(second + 1), text);
  return v;
}

std::string format_version(const Version &v) {
  std::string out = std::to_string(v.major) + "." + std::to_string(v.minor) +
                    "." + std::to_string(v.micro);
  if (!v.qualifier.empty()) {
    out += '-';
    out += v.qualifier;
  }
  return out;
}

VersionRange VersionRange::any() { return VersionRange{}; }

VersionRange VersionRange::exact(Version v) {
  VersionRange r;
  r.form_ = Form::Exact;
  r.lower_ = std::move(v);
  return r;
}

VersionRange VersionRange::interval(std::optional<Version> lower,
                                    bool lower_inclusive,
                                    std::optional<Version> upper,
                                    bool upper_inclusive) {
  if (lower && upper) {
    int c = compare_versions(*lower, *upper);
    if (c > 0)
      throw Error(Errc::MalformedVersion, "range lower bound above upper bound");
    if (c == 0 && !(lower_inclusive && upper_inclusive))
      throw Error(Errc::MalformedVersion,
                  "empty range: equal bounds must both be inclusive");
  }
  VersionRange r;
  r.form_ = Form::Interval;
  r.lower_ = std::move(lower);
  r.upper_ = std::move(upper);
  r.lower_inclusive_ = lower_inclusive;
  r.upper_inclusive_ = upper_inclusive;
  return r;
}

VersionRange VersionRange::parse(std::string_view text) {
  if (text == "*")
    return any();
  if (text.empty())
    throw Error(Errc::MalformedVersion, "empty version range");
  char open = text.front();
  if (open == '[' || open == '(') {
    char close = text.back();
    if (close != ']' && close != ')')
      throw Error(Errc::MalformedVersion,
                  "unterminated range '" + std::string(text) + "'");
    std::string_view body = text.substr(1, text.size() - 2);
    auto comma = body.find(',');
    if (comma == std::string_view::npos)
      throw Error(Errc::MalformedVersion,
                  "range missing comma: '" + std::string(text) + "'");
    std::string_view lo = body.substr(0, comma);
    std::string_view hi = body.substr(comma + 1);
    std::optional<Version> lower, upper;
    if (!lo.empty())
      lower = parse_version(lo);
    if (!hi.empty())
      upper = parse_version(hi);
    return interval(std::move(lower), open == '[', std::move(upper),
                    close == ']');
  }
  return exact(parse_version(text));
}

bool VersionRange::contains(const Version &v) const {
  switch (form_) {
  case Form::Any:
    return true;
  case Form::Exact:
    return compare_versions(*lower_, v) == 0;
  case Form::Interval:
    if (lower_) {
      int c = compare_versions(v, *lower_);
      if (c < 0 || (c == 0 && !lower_inclusive_))
        return false;
    }
    if (upper_) {
      int c = compare_versions(v, *upper_);
      if (c > 0 || (c == 0 && !upper_inclusive_))
        return false;
    }
    return true;
  }
  return false;
}

std::string VersionRange::format() const {
  switch (form_) {
  case Form::Any:
    return "*";
  case Form::Exact:
    return format_version(*lower_);
  case Form::Interval: {
    std::string out;
    out += lower_inclusive_ ? '[' : '(';
    if (lower_)
      out += format_version(*lower_);
    out += ',';
    if (upper_)
      out += format_version(*upper_);
    out += upper_inclusive_ ? ']' : ')';
    return out;
  }
  }
  return "*";
}

} // namespace resolvit
