// Copyright 2026 The sifkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SIFKIT_ERROR_HPP
#define SIFKIT_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sifkit {

enum class ErrorKind {
  // reader
  MissingEndata,
  UnknownSectionHeader,
  DuplicateSection,
  MalformedRecord,
  // expander
  UnexpectedRecord,
  UnboundParameter,
  TypeMismatch,
  UnknownDirective,
  UnterminatedLoop,
  ZeroIncrement,
  UnboundLoopVariable,
  UndefinedGroupType,
  UndefinedElementType,
  UndefinedGroup,
  UndefinedElement,
  UndefinedVariable,
  DanglingElementUse,
  UnassignedElementVariable,
  MissingParameter,
  TooManyParameters,
  ParameterNameMismatch,
  InconsistentBounds,
  // model
  RangeSignViolation,
  ZeroScaleFactor,
  // nonlinear sections
  SyntaxError,
  UnknownIntrinsic,
  UndeclaredName,
  MissingValueExpression,
  // evaluation
  DomainError,
  MissingDerivative,
  DimensionMismatch,
  NoConstraints,
  BadSubset,
  MultiplierLengthMismatch,
  // front end
  UnknownAction,
  MissingArgument,
  BadDump,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MissingEndata: return "MissingEndata";
    case ErrorKind::UnknownSectionHeader: return "UnknownSectionHeader";
    case ErrorKind::DuplicateSection: return "DuplicateSection";
    case ErrorKind::MalformedRecord: return "MalformedRecord";
    case ErrorKind::UnexpectedRecord: return "UnexpectedRecord";
    case ErrorKind::UnboundParameter: return "UnboundParameter";
    case ErrorKind::TypeMismatch: return "TypeMismatch";
    case ErrorKind::UnknownDirective: return "UnknownDirective";
    case ErrorKind::UnterminatedLoop: return "UnterminatedLoop";
    case ErrorKind::ZeroIncrement: return "ZeroIncrement";
    case ErrorKind::UnboundLoopVariable: return "UnboundLoopVariable";
    case ErrorKind::UndefinedGroupType: return "UndefinedGroupType";
    case ErrorKind::UndefinedElementType: return "UndefinedElementType";
    case ErrorKind::UndefinedGroup: return "UndefinedGroup";
    case ErrorKind::UndefinedElement: return "UndefinedElement";
    case ErrorKind::UndefinedVariable: return "UndefinedVariable";
    case ErrorKind::DanglingElementUse: return "DanglingElementUse";
    case ErrorKind::UnassignedElementVariable: return "UnassignedElementVariable";
    case ErrorKind::MissingParameter: return "MissingParameter";
    case ErrorKind::TooManyParameters: return "TooManyParameters";
    case ErrorKind::ParameterNameMismatch: return "ParameterNameMismatch";
    case ErrorKind::InconsistentBounds: return "InconsistentBounds";
    case ErrorKind::RangeSignViolation: return "RangeSignViolation";
    case ErrorKind::ZeroScaleFactor: return "ZeroScaleFactor";
    case ErrorKind::SyntaxError: return "SyntaxError";
    case ErrorKind::UnknownIntrinsic: return "UnknownIntrinsic";
    case ErrorKind::UndeclaredName: return "UndeclaredName";
    case ErrorKind::MissingValueExpression: return "MissingValueExpression";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::MissingDerivative: return "MissingDerivative";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NoConstraints: return "NoConstraints";
    case ErrorKind::BadSubset: return "BadSubset";
    case ErrorKind::MultiplierLengthMismatch: return "MultiplierLengthMismatch";
    case ErrorKind::UnknownAction: return "UnknownAction";
    case ErrorKind::MissingArgument: return "MissingArgument";
    case ErrorKind::BadDump: return "BadDump";
  }
  return "Unknown";
}

/// One reported problem. `line` is the 1-based source line, 0 when the
/// diagnostic is not tied to a line.
struct Diagnostic {
  ErrorKind kind;
  int line = 0;
  std::string message;

  std::string describe() const {
    std::string out;
    if (line > 0) out += "line " + std::to_string(line) + ": ";
    out += to_string(kind);
    out += ": ";
    out += message;
    return out;
  }

  bool operator==(const Diagnostic&) const = default;
};

/// Exception carrying one or more diagnostics. kind() is that of the first.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string message, int line = 0)
      : Error(std::vector<Diagnostic>{Diagnostic{kind, line, std::move(message)}}) {}

  explicit Error(std::vector<Diagnostic> diagnostics)
      : std::runtime_error(summarize(diagnostics)), diagnostics_(std::move(diagnostics)) {}

  ErrorKind kind() const { return diagnostics_.front().kind; }
  const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

 private:
  static std::string summarize(const std::vector<Diagnostic>& diags) {
    if (diags.empty()) return "unspecified error";
    std::string out = diags.front().describe();
    if (diags.size() > 1) out += " (+" + std::to_string(diags.size() - 1) + " more)";
    return out;
  }

  std::vector<Diagnostic> diagnostics_;
};

}  // namespace sifkit

#endif  // SIFKIT_ERROR_HPP
