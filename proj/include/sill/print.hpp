#pragma once

#include <string>

#include "sill/ast.hpp"

namespace sill {

/// Minimal-parenthesis rendering; re-parsing the output yields an equal tree.
std::string print_type(const TypePtr& t);

/// Core-form rendering. Calls with arguments never survive desugaring, so the
/// printer only ever emits zero-argument call cuts, which re-parse exactly.
std::string print_term(const TermPtr& t);

std::string print_signature(const Signature& sig);

}  // namespace sill
