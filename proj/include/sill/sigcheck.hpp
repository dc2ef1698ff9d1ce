#pragma once

#include <string>
#include <vector>

#include "sill/ast.hpp"

namespace sill {

struct Diagnostic {
  std::string message;
  Span span;
};

std::string render(const Diagnostic& d);

/// Result of the contractiveness check. A definition is contractive when
/// every path from its body through meets, joins and type names reaches a
/// structural constructor without revisiting a name; each strongly connected
/// clump of names violating this is reported as one cycle.
struct ContractivenessReport {
  struct Offender {
    std::string name;                // first cycle member in declaration order
    std::vector<std::string> cycle;  // members in the order the cycle visits them
  };
  bool ok = true;
  std::vector<Offender> offenders;
};

/// Every type name and every call target must resolve in the signature.
/// Returns one diagnostic per unresolved name.
std::vector<Diagnostic> check_names(const Signature& sig);

ContractivenessReport check_contractive(const Signature& sig);

/// Full validation: name resolution, contractiveness, then each definition
/// body checked against its declared type in the empty context. Definitions
/// see the whole signature, so mutual recursion is fine.
std::vector<Diagnostic> check_signature(const Signature& sig);

}  // namespace sill
