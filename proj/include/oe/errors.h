#pragma once

#include <stdexcept>
#include <string>

namespace oe {

enum class ErrorKind {
  kContract,    // caller broke a precondition
  kNumeric,     // NaN/Inf or degenerate norm
  kFormat,      // malformed input file
  kCycle,       // taxonomy edge list is not a DAG
  kSampling,    // rejection sampler gave up
  kCorruption,  // checkpoint checksum mismatch
  kVersion,     // checkpoint schema / task mismatch
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define OE_DEFINE_ERROR(Name, Kind)                                  \
  class Name : public Error {                                        \
   public:                                                           \
    explicit Name(const std::string& what) : Error(Kind, what) {}    \
  };

OE_DEFINE_ERROR(ContractViolation, ErrorKind::kContract)
OE_DEFINE_ERROR(NumericError, ErrorKind::kNumeric)
OE_DEFINE_ERROR(FormatError, ErrorKind::kFormat)
OE_DEFINE_ERROR(CycleError, ErrorKind::kCycle)
OE_DEFINE_ERROR(SamplingError, ErrorKind::kSampling)
OE_DEFINE_ERROR(CorruptionError, ErrorKind::kCorruption)
OE_DEFINE_ERROR(VersionError, ErrorKind::kVersion)

#undef OE_DEFINE_ERROR

inline void require(bool condition, const char* message) {
  if (!condition) throw ContractViolation(message);
}

// Process exit code for the command-line tool: 1 usage, 2 data, 3 numeric.
inline int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kContract:
      return 1;
    case ErrorKind::kNumeric:
      return 3;
    default:
      return 2;
  }
}

}  // namespace oe
