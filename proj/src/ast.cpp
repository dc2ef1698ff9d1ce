#include "sill/ast.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <optional>
#include <unordered_map>

namespace sill {

// ---------------------------------------------------------------------------
// Channel interning

namespace {

class SymbolTable {
public:
  static SymbolTable& instance() {
    static SymbolTable table;
    return table;
  }

  uint32_t intern(std::string_view name) {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = ids_.find(std::string(name));
    if (it != ids_.end()) return it->second;
    uint32_t id = static_cast<uint32_t>(names_.size());
    names_.emplace_back(name);
    ids_.emplace(names_.back(), id);
    return id;
  }

  std::string name(uint32_t id) {
    std::lock_guard<std::mutex> lock(mu_);
    return names_.at(id);
  }

private:
  SymbolTable() { intern(""); }
  std::mutex mu_;
  std::vector<std::string> names_;
  std::unordered_map<std::string, uint32_t> ids_;
};

std::atomic<uint32_t> global_gen{0};

}  // namespace

Channel Channel::named(std::string_view name) {
  return Channel(SymbolTable::instance().intern(name), 0);
}

std::string Channel::str() const {
  std::string base = SymbolTable::instance().name(sym_);
  if (gen_ == 0) return base;
  return base + "#" + std::to_string(gen_);
}

uint32_t next_global_gen() { return ++global_gen; }

// ---------------------------------------------------------------------------
// Type construction

namespace {

void sort_branches(std::vector<TypeBranch>& branches) {
  std::sort(branches.begin(), branches.end(),
            [](const TypeBranch& a, const TypeBranch& b) { return a.label < b.label; });
  for (size_t i = 1; i < branches.size(); ++i)
    if (branches[i - 1].label == branches[i].label)
      throw std::logic_error("duplicate branch label: " + branches[i].label);
  if (branches.empty()) throw std::logic_error("choice type needs at least one branch");
}

TypePtr make_type(SessionType t) { return std::make_shared<const SessionType>(std::move(t)); }

}  // namespace

namespace ty {

TypePtr end() {
  static TypePtr one = make_type({TypeKind::End, nullptr, nullptr, {}, {}});
  return one;
}

TypePtr tensor(TypePtr a, TypePtr b) {
  return make_type({TypeKind::Tensor, std::move(a), std::move(b), {}, {}});
}

TypePtr lolli(TypePtr arg, TypePtr cont) {
  return make_type({TypeKind::Lolli, std::move(arg), std::move(cont), {}, {}});
}

TypePtr internal(std::vector<TypeBranch> branches) {
  sort_branches(branches);
  return make_type({TypeKind::Internal, nullptr, nullptr, std::move(branches), {}});
}

TypePtr external(std::vector<TypeBranch> branches) {
  sort_branches(branches);
  return make_type({TypeKind::External, nullptr, nullptr, std::move(branches), {}});
}

TypePtr meet(TypePtr a, TypePtr b) {
  return make_type({TypeKind::Meet, std::move(a), std::move(b), {}, {}});
}

TypePtr join(TypePtr a, TypePtr b) {
  return make_type({TypeKind::Join, std::move(a), std::move(b), {}, {}});
}

TypePtr name(std::string n) {
  return make_type({TypeKind::Name, nullptr, nullptr, {}, std::move(n)});
}

}  // namespace ty

int type_compare(const TypePtr& a, const TypePtr& b) {
  if (a.get() == b.get()) return 0;
  if (a->kind != b->kind) return a->kind < b->kind ? -1 : 1;
  switch (a->kind) {
    case TypeKind::End:
      return 0;
    case TypeKind::Tensor:
    case TypeKind::Lolli:
    case TypeKind::Meet:
    case TypeKind::Join: {
      int c = type_compare(a->left, b->left);
      return c != 0 ? c : type_compare(a->right, b->right);
    }
    case TypeKind::Internal:
    case TypeKind::External: {
      if (a->branches.size() != b->branches.size())
        return a->branches.size() < b->branches.size() ? -1 : 1;
      for (size_t i = 0; i < a->branches.size(); ++i) {
        int c = a->branches[i].label.compare(b->branches[i].label);
        if (c != 0) return c < 0 ? -1 : 1;
        c = type_compare(a->branches[i].type, b->branches[i].type);
        if (c != 0) return c;
      }
      return 0;
    }
    case TypeKind::Name: {
      int c = a->name.compare(b->name);
      return c < 0 ? -1 : c > 0 ? 1 : 0;
    }
  }
  return 0;
}

bool type_equal(const TypePtr& a, const TypePtr& b) { return type_compare(a, b) == 0; }

size_t type_hash(const TypePtr& t) {
  auto mix = [](size_t h, size_t v) { return h * 1000003u ^ v; };
  size_t h = static_cast<size_t>(t->kind) + 0x9e3779b9;
  switch (t->kind) {
    case TypeKind::End:
      break;
    case TypeKind::Tensor:
    case TypeKind::Lolli:
    case TypeKind::Meet:
    case TypeKind::Join:
      h = mix(h, type_hash(t->left));
      h = mix(h, type_hash(t->right));
      break;
    case TypeKind::Internal:
    case TypeKind::External:
      for (const auto& br : t->branches) {
        h = mix(h, std::hash<std::string>{}(br.label));
        h = mix(h, type_hash(br.type));
      }
      break;
    case TypeKind::Name:
      h = mix(h, std::hash<std::string>{}(t->name));
      break;
  }
  return h;
}

bool is_structural(const TypePtr& t) {
  switch (t->kind) {
    case TypeKind::Meet:
    case TypeKind::Join:
    case TypeKind::Name:
      return false;
    default:
      return true;
  }
}

const TypeBranch* find_branch(const SessionType& t, const std::string& label) {
  for (const auto& br : t.branches)
    if (br.label == label) return &br;
  return nullptr;
}

// ---------------------------------------------------------------------------
// Term construction

namespace {

void sort_arms(std::vector<CaseArm>& arms) {
  std::sort(arms.begin(), arms.end(),
            [](const CaseArm& a, const CaseArm& b) { return a.label < b.label; });
  for (size_t i = 1; i < arms.size(); ++i)
    if (arms[i - 1].label == arms[i].label)
      throw std::logic_error("duplicate case label: " + arms[i].label);
  if (arms.empty()) throw std::logic_error("case needs at least one branch");
}

TermPtr make_term(ProcessTerm t) { return std::make_shared<const ProcessTerm>(std::move(t)); }

}  // namespace

namespace tm {

TermPtr spawn(Channel bound, TypePtr annotation, TermPtr child, TermPtr cont, Span sp) {
  return make_term({TermKind::Spawn, sp, bound, {}, std::move(annotation), {}, std::move(child),
                    std::move(cont), {}});
}

TermPtr fwd(Channel offer, Channel target, Span sp) {
  return make_term({TermKind::Fwd, sp, offer, target, nullptr, {}, nullptr, nullptr, {}});
}

TermPtr close(Channel ch, Span sp) {
  return make_term({TermKind::Close, sp, ch, {}, nullptr, {}, nullptr, nullptr, {}});
}

TermPtr wait(Channel ch, TermPtr cont, Span sp) {
  return make_term({TermKind::Wait, sp, ch, {}, nullptr, {}, nullptr, std::move(cont), {}});
}

TermPtr send_fresh(Channel ch, Channel bound, TermPtr payload, TermPtr cont, Span sp) {
  return make_term({TermKind::SendFresh, sp, ch, bound, nullptr, {}, std::move(payload),
                    std::move(cont), {}});
}

TermPtr recv(Channel bound, Channel ch, TermPtr cont, Span sp) {
  return make_term({TermKind::Recv, sp, ch, bound, nullptr, {}, nullptr, std::move(cont), {}});
}

TermPtr select(Channel ch, std::string label, TermPtr cont, Span sp) {
  return make_term(
      {TermKind::Select, sp, ch, {}, nullptr, std::move(label), nullptr, std::move(cont), {}});
}

TermPtr case_of(Channel ch, std::vector<CaseArm> arms, Span sp) {
  sort_arms(arms);
  return make_term({TermKind::Case, sp, ch, {}, nullptr, {}, nullptr, nullptr, std::move(arms)});
}

TermPtr call(std::string name, Span sp) {
  return make_term({TermKind::Call, sp, {}, {}, nullptr, std::move(name), nullptr, nullptr, {}});
}

TermPtr drain(Channel ch) {
  return make_term({TermKind::Drain, {}, ch, {}, nullptr, {}, nullptr, nullptr, {}});
}

}  // namespace tm

bool term_equal(const TermPtr& a, const TermPtr& b) {
  if (a.get() == b.get()) return true;
  if (!a || !b) return false;
  if (a->kind != b->kind || a->ch != b->ch || a->aux != b->aux || a->label != b->label)
    return false;
  if ((a->annotation == nullptr) != (b->annotation == nullptr)) return false;
  if (a->annotation && !type_equal(a->annotation, b->annotation)) return false;
  if (!term_equal(a->child, b->child) || !term_equal(a->cont, b->cont)) return false;
  if (a->arms.size() != b->arms.size()) return false;
  for (size_t i = 0; i < a->arms.size(); ++i)
    if (a->arms[i].label != b->arms[i].label || !term_equal(a->arms[i].body, b->arms[i].body))
      return false;
  return true;
}

namespace {

Channel subst_one(Channel c, Channel neu, Channel old) { return c == old ? neu : c; }

bool is_free_in(const TermPtr& t, Channel c) { return free_channels(t).count(c) > 0; }

TermPtr subst_rec(const TermPtr& t, Channel neu, Channel old);

// Substitutes under a binder, renaming the binder when it would capture `neu`.
// `parts` are the sub-terms in the binder's scope; returns the binder to use
// plus the rewritten sub-terms.
struct BinderResult {
  Channel binder;
  std::vector<TermPtr> parts;
};

BinderResult subst_under_binder(Channel binder, std::vector<TermPtr> parts, Channel neu,
                                Channel old) {
  if (binder == old) return {binder, std::move(parts)};  // old is shadowed here
  if (binder == neu) {
    bool old_occurs = false;
    for (const auto& p : parts)
      if (p && is_free_in(p, old)) old_occurs = true;
    if (old_occurs) {
      Channel fresh = binder.with_gen(next_global_gen());
      for (auto& p : parts)
        if (p) p = subst_rec(p, fresh, binder);
      binder = fresh;
    }
  }
  for (auto& p : parts)
    if (p) p = subst_rec(p, neu, old);
  return {binder, std::move(parts)};
}

TermPtr subst_rec(const TermPtr& t, Channel neu, Channel old) {
  switch (t->kind) {
    case TermKind::Spawn: {
      auto r = subst_under_binder(t->ch, {t->child, t->cont}, neu, old);
      return tm::spawn(r.binder, t->annotation, r.parts[0], r.parts[1], t->span);
    }
    case TermKind::Fwd:
      return tm::fwd(subst_one(t->ch, neu, old), subst_one(t->aux, neu, old), t->span);
    case TermKind::Close:
      return tm::close(subst_one(t->ch, neu, old), t->span);
    case TermKind::Wait:
      return tm::wait(subst_one(t->ch, neu, old), subst_rec(t->cont, neu, old), t->span);
    case TermKind::SendFresh: {
      auto r = subst_under_binder(t->aux, {t->child}, neu, old);
      return tm::send_fresh(subst_one(t->ch, neu, old), r.binder, r.parts[0],
                            subst_rec(t->cont, neu, old), t->span);
    }
    case TermKind::Recv: {
      auto r = subst_under_binder(t->aux, {t->cont}, neu, old);
      return tm::recv(r.binder, subst_one(t->ch, neu, old), r.parts[0], t->span);
    }
    case TermKind::Select:
      return tm::select(subst_one(t->ch, neu, old), t->label, subst_rec(t->cont, neu, old),
                        t->span);
    case TermKind::Case: {
      std::vector<CaseArm> arms;
      arms.reserve(t->arms.size());
      for (const auto& arm : t->arms) arms.push_back({arm.label, subst_rec(arm.body, neu, old)});
      return tm::case_of(subst_one(t->ch, neu, old), std::move(arms), t->span);
    }
    case TermKind::Call:
      return t;
    case TermKind::Drain:
      return tm::drain(subst_one(t->ch, neu, old));
  }
  return t;
}

}  // namespace

TermPtr subst_channel(const TermPtr& term, Channel neu, Channel old) {
  if (neu == old) return term;
  return subst_rec(term, neu, old);
}

TermPtr erase(const TermPtr& term) {
  if (!term) return term;
  switch (term->kind) {
    case TermKind::Spawn:
      return tm::spawn(term->ch, nullptr, erase(term->child), erase(term->cont), term->span);
    case TermKind::Wait:
      return tm::wait(term->ch, erase(term->cont), term->span);
    case TermKind::SendFresh:
      return tm::send_fresh(term->ch, term->aux, erase(term->child), erase(term->cont),
                            term->span);
    case TermKind::Recv:
      return tm::recv(term->aux, term->ch, erase(term->cont), term->span);
    case TermKind::Select:
      return tm::select(term->ch, term->label, erase(term->cont), term->span);
    case TermKind::Case: {
      std::vector<CaseArm> arms;
      for (const auto& arm : term->arms) arms.push_back({arm.label, erase(arm.body)});
      return tm::case_of(term->ch, std::move(arms), term->span);
    }
    default:
      return term;
  }
}

namespace {

void free_rec(const TermPtr& t, std::set<Channel>& out) {
  if (!t) return;
  switch (t->kind) {
    case TermKind::Spawn: {
      std::set<Channel> inner;
      free_rec(t->child, inner);
      free_rec(t->cont, inner);
      inner.erase(t->ch);
      out.insert(inner.begin(), inner.end());
      break;
    }
    case TermKind::Fwd:
      out.insert(t->ch);
      out.insert(t->aux);
      break;
    case TermKind::Close:
    case TermKind::Drain:
      out.insert(t->ch);
      break;
    case TermKind::Wait:
      out.insert(t->ch);
      free_rec(t->cont, out);
      break;
    case TermKind::SendFresh: {
      out.insert(t->ch);
      std::set<Channel> payload;
      free_rec(t->child, payload);
      payload.erase(t->aux);
      out.insert(payload.begin(), payload.end());
      free_rec(t->cont, out);
      break;
    }
    case TermKind::Recv: {
      out.insert(t->ch);
      std::set<Channel> inner;
      free_rec(t->cont, inner);
      inner.erase(t->aux);
      out.insert(inner.begin(), inner.end());
      break;
    }
    case TermKind::Select:
      out.insert(t->ch);
      free_rec(t->cont, out);
      break;
    case TermKind::Case:
      out.insert(t->ch);
      for (const auto& arm : t->arms) free_rec(arm.body, out);
      break;
    case TermKind::Call:
      break;
  }
}

// Canonical binder names live in a dedicated symbol so they cannot clash with
// anything a user can write.
Channel canonical_binder(uint32_t index) {
  static Channel base = Channel::named("$bound");
  return base.with_gen(index + 1);
}

TermPtr canon_rec(const TermPtr& t, std::map<Channel, Channel>& env, uint32_t& counter) {
  if (!t) return t;
  auto resolve = [&env](Channel c) {
    auto it = env.find(c);
    return it == env.end() ? c : it->second;
  };
  switch (t->kind) {
    case TermKind::Spawn: {
      Channel canon = canonical_binder(counter++);
      auto saved = env.find(t->ch) == env.end() ? std::optional<Channel>{}
                                                : std::optional<Channel>{env[t->ch]};
      env[t->ch] = canon;
      TermPtr child = canon_rec(t->child, env, counter);
      TermPtr cont = canon_rec(t->cont, env, counter);
      if (saved) env[t->ch] = *saved; else env.erase(t->ch);
      return tm::spawn(canon, t->annotation, child, cont, t->span);
    }
    case TermKind::Fwd:
      return tm::fwd(resolve(t->ch), resolve(t->aux), t->span);
    case TermKind::Close:
      return tm::close(resolve(t->ch), t->span);
    case TermKind::Wait:
      return tm::wait(resolve(t->ch), canon_rec(t->cont, env, counter), t->span);
    case TermKind::SendFresh: {
      Channel subject = resolve(t->ch);
      Channel canon = canonical_binder(counter++);
      auto saved = env.find(t->aux) == env.end() ? std::optional<Channel>{}
                                                 : std::optional<Channel>{env[t->aux]};
      env[t->aux] = canon;
      TermPtr payload = canon_rec(t->child, env, counter);
      if (saved) env[t->aux] = *saved; else env.erase(t->aux);
      return tm::send_fresh(subject, canon, payload, canon_rec(t->cont, env, counter), t->span);
    }
    case TermKind::Recv: {
      Channel subject = resolve(t->ch);
      Channel canon = canonical_binder(counter++);
      auto saved = env.find(t->aux) == env.end() ? std::optional<Channel>{}
                                                 : std::optional<Channel>{env[t->aux]};
      env[t->aux] = canon;
      TermPtr cont = canon_rec(t->cont, env, counter);
      if (saved) env[t->aux] = *saved; else env.erase(t->aux);
      return tm::recv(canon, subject, cont, t->span);
    }
    case TermKind::Select:
      return tm::select(resolve(t->ch), t->label, canon_rec(t->cont, env, counter), t->span);
    case TermKind::Case: {
      std::vector<CaseArm> arms;
      for (const auto& arm : t->arms)
        arms.push_back({arm.label, canon_rec(arm.body, env, counter)});
      return tm::case_of(resolve(t->ch), std::move(arms), t->span);
    }
    case TermKind::Call:
      return t;
    case TermKind::Drain:
      return tm::drain(resolve(t->ch));
  }
  return t;
}

}  // namespace

std::set<Channel> free_channels(const TermPtr& term) {
  std::set<Channel> out;
  free_rec(term, out);
  return out;
}

TermPtr alpha_canonical(const TermPtr& term) {
  std::map<Channel, Channel> env;
  uint32_t counter = 0;
  return canon_rec(term, env, counter);
}

bool alpha_equal(const TermPtr& a, const TermPtr& b) {
  return term_equal(alpha_canonical(a), alpha_canonical(b));
}

// ---------------------------------------------------------------------------
// Signatures

bool Signature::add_type(TypeDecl decl) {
  if (type_index_.count(decl.name) || proc_index_.count(decl.name)) return false;
  type_index_[decl.name] = types_.size();
  types_.push_back(std::move(decl));
  return true;
}

bool Signature::add_proc(ProcDecl decl) {
  if (type_index_.count(decl.name) || proc_index_.count(decl.name)) return false;
  proc_index_[decl.name] = procs_.size();
  procs_.push_back(std::move(decl));
  return true;
}

const TypeDecl* Signature::find_type(const std::string& name) const {
  auto it = type_index_.find(name);
  return it == type_index_.end() ? nullptr : &types_[it->second];
}

const ProcDecl* Signature::find_proc(const std::string& name) const {
  auto it = proc_index_.find(name);
  return it == proc_index_.end() ? nullptr : &procs_[it->second];
}

TypePtr unfold(const Signature& sig, const std::string& name) {
  const TypeDecl* decl = sig.find_type(name);
  if (!decl) throw UndefinedNameError(name);
  return decl->body;
}

bool signature_equal(const Signature& a, const Signature& b) {
  const auto& at = a.type_decls();
  const auto& bt = b.type_decls();
  if (at.size() != bt.size()) return false;
  for (size_t i = 0; i < at.size(); ++i)
    if (at[i].name != bt[i].name || !type_equal(at[i].body, bt[i].body)) return false;
  const auto& ap = a.proc_decls();
  const auto& bp = b.proc_decls();
  if (ap.size() != bp.size()) return false;
  for (size_t i = 0; i < ap.size(); ++i) {
    // arity is surface metadata; desugared bodies already reflect it
    if (ap[i].name != bp[i].name || ap[i].offer != bp[i].offer) return false;
    if (!type_equal(ap[i].declared, bp[i].declared)) return false;
    if (!term_equal(ap[i].body, bp[i].body)) return false;
  }
  return true;
}

}  // namespace sill
