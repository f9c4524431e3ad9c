#include "resolvit/model.hpp"

#include "resolvit/errors.hpp"

namespace resolvit {

const char *kind_name(Kind k) {
  switch (k) {
  case Kind::Bundle:
    return "bundle";
  case Kind::Native:
    return "native";
  case Kind::Driver:
    return "driver";
  }
  return "bundle";
}

Kind parse_kind(std::string_view text) {
  if (text == "bundle")
    return Kind::Bundle;
  if (text == "native")
    return Kind::Native;
  if (text == "driver")
    return Kind::Driver;
  throw Error(Errc::SchemaViolation, "unknown unit kind '" + std::string(text) + "'");
}

bool UnitId::operator<(const UnitId &other) const {
  if (name != other.name)
    return name < other.name;
  if (int c = compare_versions(version, other.version); c != 0)
    return c < 0;
  return static_cast<int>(kind) < static_cast<int>(other.kind);
}

std::string UnitId::spec() const {
  return name + "@" + format_version(version) + ":" + kind_name(kind);
}

bool ServiceRef::operator<(const ServiceRef &other) const {
  if (name != other.name)
    return name < other.name;
  return compare_versions(version, other.version) < 0;
}

const char *group_op_name(GroupOp op) {
  switch (op) {
  case GroupOp::And:
    return "AND";
  case GroupOp::Or:
    return "OR";
  case GroupOp::Xor:
    return "XOR";
  case GroupOp::Not:
    return "NOT";
  }
  return "AND";
}

bool is_hex64(std::string_view text) {
  if (text.size() != 64)
    return false;
  for (char c : text)
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f')))
      return false;
  return true;
}

const char *errc_name(Errc code) {
  switch (code) {
  case Errc::MalformedVersion:
    return "MalformedVersion";
  case Errc::MalformedDocument:
    return "MalformedDocument";
  case Errc::UnknownDependencyType:
    return "UnknownDependencyType";
  case Errc::SchemaViolation:
    return "SchemaViolation";
  case Errc::DuplicateUnit:
    return "DuplicateUnit";
  case Errc::RepositoryUnavailable:
    return "RepositoryUnavailable";
  case Errc::IntegrityError:
    return "IntegrityError";
  case Errc::NotFound:
    return "NotFound";
  case Errc::NoProviderFound:
    return "NoProviderFound";
  case Errc::NoSolution:
    return "NoSolution";
  case Errc::UnknownPolicy:
    return "UnknownPolicy";
  case Errc::Conflict:
    return "Conflict";
  case Errc::CorruptState:
    return "CorruptState";
  case Errc::DuplicateInstall:
    return "DuplicateInstall";
  case Errc::NotInstalled:
    return "NotInstalled";
  case Errc::ExecutionFailed:
    return "ExecutionFailed";
  case Errc::LockHeld:
    return "LockHeld";
  case Errc::RollbackFailed:
    return "RollbackFailed";
  case Errc::CycleError:
    return "CycleError";
  case Errc::UsageError:
    return "UsageError";
  }
  return "Error";
}

} // namespace resolvit
