#pragma once

#include <stdexcept>
#include <string>

namespace resolvit {

enum class Errc {
  MalformedVersion,
  MalformedDocument,
  UnknownDependencyType,
  SchemaViolation,
  DuplicateUnit,
  RepositoryUnavailable,
  IntegrityError,
  NotFound,
  NoProviderFound,
  NoSolution,
  UnknownPolicy,
  Conflict,
  CorruptState,
  DuplicateInstall,
  NotInstalled,
  ExecutionFailed,
  LockHeld,
  RollbackFailed,
  CycleError,
  UsageError,
};

class Error : public std::runtime_error {
public:
  Error(Errc code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}

  Errc code() const { return code_; }

private:
  Errc code_;
};

const char *errc_name(Errc code);

} // namespace resolvit
