#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sill/ast.hpp"

namespace sill {

struct ParseError : std::runtime_error {
  ParseError(std::string msg, Span sp)
      : std::runtime_error(std::to_string(sp.line) + ":" + std::to_string(sp.col) + ": " + msg),
        span(sp) {}
  Span span;
};

/// Channel names for desugaring, drawn from the reserved `%N` lexeme class.
/// Skips any number already present in the source so generated names stay
/// fresh within the file.
class NameSupply {
public:
  NameSupply() = default;
  void reserve(uint32_t n) {
    if (n >= next_) next_ = n + 1;
  }
  Channel fresh() { return Channel::named("%" + std::to_string(next_++)); }

private:
  uint32_t next_ = 0;
};

/// Parses a source file into a signature with all surface sugar removed:
/// definition parameters become leading receives, and calls become spawns of
/// the named definition followed by one forwarding send per argument.
/// Throws ParseError on lexical errors, syntax errors and duplicate names.
Signature parse_signature(std::string_view text);

/// Parses a type expression. Names are not resolved here.
TypePtr parse_type(std::string_view text);

/// Expands a call of `callee` with channel arguments `args`. A tail call ends
/// by forwarding `target` to the spawned definition; otherwise `cont` runs
/// with `target` rebound to it.
TermPtr desugar_call(const std::string& callee, const std::vector<Channel>& args, Channel target,
                     bool tail, TermPtr cont, NameSupply& names, Span sp = {});

}  // namespace sill
