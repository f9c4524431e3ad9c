#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace resolvit {

// Three numeric components plus an optional alphanumeric qualifier.
// "1.2.0" or "1.2.0-beta1". A qualified version sorts below the
// unqualified release of the same numeric triple.
struct Version {
  std::uint64_t major = 0;
  std::uint64_t minor = 0;
  std::uint64_t micro = 0;
  std::string qualifier; // empty means none

  bool operator==(const Version &other) const = default;
};

// Returns <0, 0 or >0.
int compare_versions(const Version &a, const Version &b);

inline bool operator<(const Version &a, const Version &b) {
  return compare_versions(a, b) < 0;
}

Version parse_version(std::string_view text); // throws MalformedVersion
std::string format_version(const Version &v);

// A constraint over versions. Textual forms: "*" (any), a bare version
// (exact match), or an interval "[a,b)", "(a,b]", "[a,]", ... where either
// bound may be omitted.
class VersionRange {
public:
  static VersionRange any();
  static VersionRange exact(Version v);
  static VersionRange interval(std::optional<Version> lower, bool lower_inclusive,
                               std::optional<Version> upper, bool upper_inclusive);

  static VersionRange parse(std::string_view text); // throws MalformedVersion

  bool contains(const Version &v) const;
  std::string format() const;

  bool is_any() const { return form_ == Form::Any; }
  bool is_exact() const { return form_ == Form::Exact; }

  bool operator==(const VersionRange &other) const = default;

private:
  enum class Form { Any, Exact, Interval };

  Form form_ = Form::Any;
  std::optional<Version> lower_;
  std::optional<Version> upper_;
  bool lower_inclusive_ = true;
  bool upper_inclusive_ = true;
};

} // namespace resolvit
