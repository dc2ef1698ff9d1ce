#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sill {

struct Span {
  int line = 0;  // 1-based, 0 = unknown
  int col = 0;
};

/// Interned channel name plus a generation counter. Generation 0 names come
/// from source text; higher generations are minted at runtime or while
/// renaming binders, so they can never collide with source names.
class Channel {
public:
  Channel() = default;
  static Channel named(std::string_view name);

  Channel with_gen(uint32_t gen) const { return Channel(sym_, gen); }
  uint32_t sym() const { return sym_; }
  uint32_t gen() const { return gen_; }
  std::string str() const;

  friend auto operator<=>(const Channel&, const Channel&) = default;

private:
  Channel(uint32_t sym, uint32_t gen) : sym_(sym), gen_(gen) {}
  uint32_t sym_ = 0;
  uint32_t gen_ = 0;
};

/// Mints generations that are unique process-wide; used for capture-avoiding
/// renames where no local counter is available.
uint32_t next_global_gen();

// ---------------------------------------------------------------------------
// Session types

enum class TypeKind : uint8_t {
  End,       // 1
  Tensor,    // A * B
  Lolli,     // A -o B
  Internal,  // +{l: A, ...}
  External,  // &{l: A, ...}
  Meet,      // A /\ B
  Join,      // A \/ B
  Name,      // defined type name
};

struct SessionType;
using TypePtr = std::shared_ptr<const SessionType>;

struct TypeBranch {
  std::string label;
  TypePtr type;
};

struct SessionType {
  TypeKind kind;
  TypePtr left, right;              // Tensor/Lolli/Meet/Join; Lolli: left = argument
  std::vector<TypeBranch> branches; // Internal/External; sorted by label, no duplicates
  std::string name;                 // Name
};

namespace ty {
TypePtr end();
TypePtr tensor(TypePtr a, TypePtr b);
TypePtr lolli(TypePtr arg, TypePtr cont);
TypePtr internal(std::vector<TypeBranch> branches);
TypePtr external(std::vector<TypeBranch> branches);
TypePtr meet(TypePtr a, TypePtr b);
TypePtr join(TypePtr a, TypePtr b);
TypePtr name(std::string n);
}  // namespace ty

/// Total structural order; branch label order never matters because branches
/// are kept sorted.
int type_compare(const TypePtr& a, const TypePtr& b);
bool type_equal(const TypePtr& a, const TypePtr& b);
size_t type_hash(const TypePtr& t);

/// End, Tensor, Lolli, Internal and External. Meet/Join/Name are not.
bool is_structural(const TypePtr& t);

const TypeBranch* find_branch(const SessionType& t, const std::string& label);

// ---------------------------------------------------------------------------
// Process terms

enum class TermKind : uint8_t {
  Spawn,      // ch bound here; child provides ch, cont uses it
  Fwd,        // offer ch by forwarding to aux
  Close,      // close ch
  Wait,       // wait ch; cont
  SendFresh,  // send ch (aux <- child); cont
  Recv,       // aux <- recv ch; cont
  Select,     // ch.label; cont
  Case,       // case ch of arms
  Call,       // named process definition
  Drain,      // runtime-only universal client of ch; not surface syntax
};

struct ProcessTerm;
using TermPtr = std::shared_ptr<const ProcessTerm>;

struct CaseArm {
  std::string label;
  TermPtr body;
};

struct ProcessTerm {
  TermKind kind;
  Span span;
  Channel ch;                 // subject channel (bound channel for Spawn)
  Channel aux;                // Fwd target; SendFresh/Recv bound channel
  TypePtr annotation;         // Spawn only; null when absent
  std::string label;          // Select label / Call definition name
  TermPtr child, cont;        // Spawn: child+cont; SendFresh: payload+cont
  std::vector<CaseArm> arms;  // Case; sorted by label, no duplicates
};

namespace tm {
TermPtr spawn(Channel bound, TypePtr annotation, TermPtr child, TermPtr cont, Span sp = {});
TermPtr fwd(Channel offer, Channel target, Span sp = {});
TermPtr close(Channel ch, Span sp = {});
TermPtr wait(Channel ch, TermPtr cont, Span sp = {});
TermPtr send_fresh(Channel ch, Channel bound, TermPtr payload, TermPtr cont, Span sp = {});
TermPtr recv(Channel bound, Channel ch, TermPtr cont, Span sp = {});
TermPtr select(Channel ch, std::string label, TermPtr cont, Span sp = {});
TermPtr case_of(Channel ch, std::vector<CaseArm> arms, Span sp = {});
TermPtr call(std::string name, Span sp = {});
TermPtr drain(Channel ch);
}  // namespace tm

bool term_equal(const TermPtr& a, const TermPtr& b);  // structural, ignores spans

/// Capture-avoiding substitution of `neu` for free occurrences of `old`.
TermPtr subst_channel(const TermPtr& term, Channel neu, Channel old);

/// Strips every Spawn annotation.
TermPtr erase(const TermPtr& term);

std::set<Channel> free_channels(const TermPtr& term);

/// Renames binders to a canonical numbering so alpha-equivalent terms become
/// structurally equal.
TermPtr alpha_canonical(const TermPtr& term);
bool alpha_equal(const TermPtr& a, const TermPtr& b);

// ---------------------------------------------------------------------------
// Signatures

struct TypeDecl {
  std::string name;
  TypePtr body;
  Span span;
};

struct ProcDecl {
  std::string name;
  Channel offer;
  TypePtr declared;
  TermPtr body;    // parameters already desugared into leading receives
  size_t arity = 0;  // surface parameter count, used at call sites
  Span span;
};

struct UndefinedNameError : std::runtime_error {
  explicit UndefinedNameError(const std::string& n)
      : std::runtime_error("undefined type name: " + n), name(n) {}
  std::string name;
};

class Signature {
public:
  bool add_type(TypeDecl decl);  // false on duplicate name
  bool add_proc(ProcDecl decl);

  const TypeDecl* find_type(const std::string& name) const;
  const ProcDecl* find_proc(const std::string& name) const;

  const std::vector<TypeDecl>& type_decls() const { return types_; }
  const std::vector<ProcDecl>& proc_decls() const { return procs_; }

private:
  std::vector<TypeDecl> types_;
  std::vector<ProcDecl> procs_;
  std::map<std::string, size_t> type_index_;
  std::map<std::string, size_t> proc_index_;
};

/// One-step unfolding: the stored right-hand side of the definition.
TypePtr unfold(const Signature& sig, const std::string& name);

bool signature_equal(const Signature& a, const Signature& b);

}  // namespace sill

template <>
struct std::hash<sill::Channel> {
  size_t operator()(const sill::Channel& c) const {
    return (size_t(c.sym()) << 20) ^ c.gen();
  }
};
