#include "sill/typecheck.hpp"

#include <algorithm>

#include "sill/print.hpp"

namespace sill {

const TypeMultiset* ChannelContext::find(Channel c) const {
  auto it = entries_.find(c);
  return it == entries_.end() ? nullptr : &it->second;
}

std::string ChannelContext::str() const {
  std::string out;
  for (const auto& [ch, ms] : entries_) {
    if (!out.empty()) out += ", ";
    out += ch.str() + ": " + ms.str();
  }
  return out.empty() ? "(empty)" : out;
}

std::string TypeError::render() const {
  std::string out = message;
  if (!candidates_tried.empty()) {
    out += " (tried:";
    for (const auto& c : candidates_tried) out += " " + c + ";";
    out.back() = ')';
  }
  return out;
}

SplitResult split_context(const ChannelContext& ctx, const std::set<Channel>& left_needs,
                          const std::set<Channel>& right_needs, Span sp) {
  SplitResult r;
  for (const auto& [ch, ms] : ctx.entries()) {
    bool l = left_needs.count(ch) > 0;
    bool rr = right_needs.count(ch) > 0;
    if (l && rr) {
      r.error = TypeError{"channel '" + ch.str() + "' is used by both sides of a spawn or send",
                          sp, {}, 0};
      return r;
    }
    if (!l && !rr) {
      r.error = TypeError{"channel '" + ch.str() + "' is never used", sp, {}, 0};
      return r;
    }
    (l ? r.left : r.right).set(ch, ms);
  }
  return r;
}

namespace {

struct Judgment {
  ChannelContext ctx;
  TypeMultiset theta;
};

// Invertible phase: flatten joins in theta and meets in context multisets,
// unfold names everywhere, then split on meets in theta and joins in context
// entries. Every returned judgment is structural-only and all must hold.
void saturate_judgment(const Signature& sig, Judgment j, std::vector<Judgment>& out, int depth) {
  if (depth > 10000)
    throw std::logic_error("typing saturation did not converge; is the signature contractive?");
  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t i = 0; i < j.theta.size(); ++i) {
      const TypePtr& t = j.theta.items()[i];
      if (t->kind == TypeKind::Name) {
        j.theta = j.theta.replaced(i, {unfold(sig, t->name)});
        changed = true;
        break;
      }
      if (t->kind == TypeKind::Join) {
        j.theta = j.theta.replaced(i, {t->left, t->right});
        changed = true;
        break;
      }
    }
    if (changed) continue;
    for (const auto& [ch, ms] : j.ctx.entries()) {
      for (size_t i = 0; i < ms.size(); ++i) {
        const TypePtr& t = ms.items()[i];
        if (t->kind == TypeKind::Name) {
          j.ctx.set(ch, ms.replaced(i, {unfold(sig, t->name)}));
          changed = true;
          break;
        }
        if (t->kind == TypeKind::Meet) {
          j.ctx.set(ch, ms.replaced(i, {t->left, t->right}));
          changed = true;
          break;
        }
      }
      if (changed) break;
    }
  }
  for (size_t i = 0; i < j.theta.size(); ++i) {
    const TypePtr& t = j.theta.items()[i];
    if (t->kind == TypeKind::Meet) {
      Judgment a = j, b = j;
      a.theta = j.theta.replaced(i, {t->left});
      b.theta = j.theta.replaced(i, {t->right});
      saturate_judgment(sig, std::move(a), out, depth + 1);
      saturate_judgment(sig, std::move(b), out, depth + 1);
      return;
    }
  }
  for (const auto& [ch, ms] : j.ctx.entries()) {
    for (size_t i = 0; i < ms.size(); ++i) {
      const TypePtr& t = ms.items()[i];
      if (t->kind == TypeKind::Join) {
        Judgment a = j, b = j;
        a.ctx.set(ch, ms.replaced(i, {t->left}));
        b.ctx.set(ch, ms.replaced(i, {t->right}));
        saturate_judgment(sig, std::move(a), out, depth + 1);
        saturate_judgment(sig, std::move(b), out, depth + 1);
        return;
      }
    }
  }
  out.push_back(std::move(j));
}

class Checker {
public:
  explicit Checker(const Signature& sig) : sig_(sig) {}

  CheckResult check_term(const ChannelContext& ctx, const TermPtr& p, Channel offer,
                         const TypeMultiset& theta, int depth) {
    std::vector<Judgment> judgments;
    saturate_judgment(sig_, Judgment{ctx, theta}, judgments, 0);
    for (auto& j : judgments)
      if (auto err = dispatch(j.ctx, p, offer, j.theta, depth)) return err;
    return std::nullopt;
  }

private:
  CheckResult fail(Span sp, std::string msg, int depth,
                   std::vector<std::string> candidates = {}) {
    return TypeError{std::move(msg), sp, std::move(candidates), depth};
  }

  // Among several failed alternatives, report whichever failure happened
  // deepest in the term; ties keep the earlier one.
  static void keep_deeper(CheckResult& best, CheckResult&& next) {
    if (!next) return;
    if (!best || next->depth > best->depth) best = std::move(next);
  }

  CheckResult dispatch(const ChannelContext& ctx, const TermPtr& p, Channel offer,
                       const TypeMultiset& theta, int depth) {
    switch (p->kind) {
      case TermKind::Fwd: {
        if (p->ch != offer)
          return fail(p->span, "forward must provide the offered channel '" + offer.str() + "'",
                      depth);
        const TypeMultiset* from = ctx.find(p->aux);
        if (!from)
          return fail(p->span, "forward source '" + p->aux.str() + "' is not in the context",
                      depth);
        if (ctx.size() != 1)
          return fail(p->span, "forward leaves channels unused: " + ctx.str(), depth);
        MemoTable memo;
        if (!decide(sig_, *from, theta, memo))
          return fail(p->span,
                      "forward " + offer.str() + " <- " + p->aux.str() + ": " + from->str() +
                          " is not a subtype of " + theta.str(),
                      depth);
        return std::nullopt;
      }
      case TermKind::Spawn:
        return check_spawn(ctx, p, offer, theta, depth);
      case TermKind::Close: {
        if (p->ch != offer)
          return fail(p->span, "close acts on '" + p->ch.str() + "' but the process offers '" +
                                   offer.str() + "'",
                      depth);
        if (!ctx.empty())
          return fail(p->span, "close leaves channels unused: " + ctx.str(), depth);
        for (const auto& t : theta.items())
          if (t->kind == TypeKind::End) return std::nullopt;
        return fail(p->span, "close requires 1 among the offered types " + theta.str(), depth);
      }
      case TermKind::Wait: {
        const TypeMultiset* ms = require_used(ctx, p, offer, depth);
        if (!ms) return used_error(ctx, p, offer, depth);
        for (const auto& t : ms->items()) {
          if (t->kind != TypeKind::End) continue;
          ChannelContext rest = ctx;
          rest.remove(p->ch);
          return check_term(rest, p->cont, offer, theta, depth + 1);
        }
        return fail(p->span, "wait requires 1 among the types of '" + p->ch.str() + "'", depth);
      }
      case TermKind::SendFresh:
        return p->ch == offer ? check_send_offer(ctx, p, offer, theta, depth)
                              : check_send_used(ctx, p, offer, theta, depth);
      case TermKind::Recv:
        return p->ch == offer ? check_recv_offer(ctx, p, offer, theta, depth)
                              : check_recv_used(ctx, p, offer, theta, depth);
      case TermKind::Select:
        return p->ch == offer ? check_select_offer(ctx, p, offer, theta, depth)
                              : check_select_used(ctx, p, offer, theta, depth);
      case TermKind::Case:
        return p->ch == offer ? check_case_offer(ctx, p, offer, theta, depth)
                              : check_case_used(ctx, p, offer, theta, depth);
      case TermKind::Call: {
        const ProcDecl* def = sig_.find_proc(p->label);
        if (!def) return fail(p->span, "call of undefined process '" + p->label + "'", depth);
        if (!ctx.empty())
          return fail(p->span, "call of '" + p->label + "' leaves channels unused: " + ctx.str(),
                      depth);
        MemoTable memo;
        if (!decide(sig_, TypeMultiset::of(def->declared), theta, memo))
          return fail(p->span,
                      "declared type of '" + p->label + "' does not entail " + theta.str(),
                      depth);
        return std::nullopt;
      }
      case TermKind::Drain:
        return fail(p->span, "drain is runtime-only and has no typing rule", depth);
    }
    return fail(p->span, "unhandled process form", depth);
  }

  // The context multiset of the channel a left rule acts on.
  const TypeMultiset* require_used(const ChannelContext& ctx, const TermPtr& p, Channel offer,
                                   int) {
    if (p->ch == offer) return nullptr;
    return ctx.find(p->ch);
  }

  CheckResult used_error(const ChannelContext&, const TermPtr& p, Channel offer, int depth) {
    if (p->ch == offer)
      return fail(p->span, "action on the offered channel '" + offer.str() + "' has the wrong shape",
                  depth);
    return fail(p->span, "channel '" + p->ch.str() + "' is not in the context", depth);
  }

  // Renames the bound channel when it would collide with the context or the
  // offered channel.
  static std::pair<Channel, TermPtr> freshen_binder(Channel binder, TermPtr scope,
                                                    const ChannelContext& ctx, Channel offer) {
    if (!ctx.contains(binder) && binder != offer) return {binder, std::move(scope)};
    Channel fresh = binder.with_gen(next_global_gen());
    return {fresh, subst_channel(scope, fresh, binder)};
  }

  CheckResult check_spawn(const ChannelContext& ctx, const TermPtr& p, Channel offer,
                          const TypeMultiset& theta, int depth) {
    TypePtr ann = p->annotation;
    if (!ann) {
      if (p->child->kind != TermKind::Call)
        return fail(p->span, "spawn of '" + p->ch.str() + "' needs a type annotation", depth);
      const ProcDecl* def = sig_.find_proc(p->child->label);
      if (!def)
        return fail(p->child->span, "call of undefined process '" + p->child->label + "'", depth);
      ann = def->declared;
    }
    Channel bound = p->ch;
    TermPtr child = p->child, cont = p->cont;
    if (ctx.contains(bound) || bound == offer) {
      Channel fresh = bound.with_gen(next_global_gen());
      child = subst_channel(child, fresh, bound);
      cont = subst_channel(cont, fresh, bound);
      bound = fresh;
    }
    std::set<Channel> child_free = free_channels(child);
    child_free.erase(bound);
    std::set<Channel> cont_free = free_channels(cont);
    cont_free.erase(bound);
    SplitResult split = split_context(ctx, child_free, cont_free, p->span);
    if (split.error) return split.error;
    if (auto err = check_term(split.left, child, bound, TypeMultiset::of(ann), depth + 1))
      return err;
    ChannelContext rest = split.right;
    rest.set(bound, TypeMultiset::of(ann));
    return check_term(rest, cont, offer, theta, depth + 1);
  }

  CheckResult check_send_offer(const ChannelContext& ctx, const TermPtr& p, Channel offer,
                               const TypeMultiset& theta, int depth) {
    auto [bound, payload] = freshen_binder(p->aux, p->child, ctx, offer);
    std::set<Channel> payload_free = free_channels(payload);
    payload_free.erase(bound);
    std::set<Channel> cont_free = free_channels(p->cont);
    CheckResult best;
    std::vector<std::string> tried;
    for (const auto& t : theta.items()) {
      if (t->kind != TypeKind::Tensor) continue;
      tried.push_back(print_type(t));
      SplitResult split = split_context(ctx, payload_free, cont_free, p->span);
      if (split.error) return split.error;
      CheckResult err =
          check_term(split.left, payload, bound, TypeMultiset::of(t->left), depth + 1);
      if (!err) err = check_term(split.right, p->cont, offer, TypeMultiset::of(t->right), depth + 1);
      if (!err) return std::nullopt;
      keep_deeper(best, std::move(err));
    }
    if (tried.empty())
      return fail(p->span, "send on the offered channel requires a tensor among " + theta.str(),
                  depth);
    best->candidates_tried = std::move(tried);
    return best;
  }

  CheckResult check_send_used(const ChannelContext& ctx, const TermPtr& p, Channel offer,
                              const TypeMultiset& theta, int depth) {
    const TypeMultiset* ms = ctx.find(p->ch);
    if (!ms) return used_error(ctx, p, offer, depth);
    ChannelContext without = ctx;
    without.remove(p->ch);
    auto [bound, payload] = freshen_binder(p->aux, p->child, ctx, offer);
    std::set<Channel> payload_free = free_channels(payload);
    payload_free.erase(bound);
    if (payload_free.count(p->ch))
      return fail(p->span, "channel '" + p->ch.str() + "' cannot appear in its own argument",
                  depth);
    std::set<Channel> cont_free = free_channels(p->cont);
    cont_free.erase(p->ch);
    CheckResult best;
    std::vector<std::string> tried;
    for (const auto& t : ms->items()) {
      if (t->kind != TypeKind::Lolli) continue;
      tried.push_back(print_type(t));
      SplitResult split = split_context(without, payload_free, cont_free, p->span);
      if (split.error) return split.error;
      CheckResult err =
          check_term(split.left, payload, bound, TypeMultiset::of(t->left), depth + 1);
      if (!err) {
        ChannelContext rest = split.right;
        rest.set(p->ch, TypeMultiset::of(t->right));
        err = check_term(rest, p->cont, offer, theta, depth + 1);
      }
      if (!err) return std::nullopt;
      keep_deeper(best, std::move(err));
    }
    if (tried.empty())
      return fail(p->span,
                  "send on '" + p->ch.str() + "' requires an arrow among " + ms->str(), depth);
    best->candidates_tried = std::move(tried);
    return best;
  }

  CheckResult check_recv_offer(const ChannelContext& ctx, const TermPtr& p, Channel offer,
                               const TypeMultiset& theta, int depth) {
    auto [bound, cont] = freshen_binder(p->aux, p->cont, ctx, offer);
    CheckResult best;
    std::vector<std::string> tried;
    for (const auto& t : theta.items()) {
      if (t->kind != TypeKind::Lolli) continue;
      tried.push_back(print_type(t));
      ChannelContext extended = ctx;
      extended.set(bound, TypeMultiset::of(t->left));
      CheckResult err = check_term(extended, cont, offer, TypeMultiset::of(t->right), depth + 1);
      if (!err) return std::nullopt;
      keep_deeper(best, std::move(err));
    }
    if (tried.empty())
      return fail(p->span,
                  "receive on the offered channel requires an arrow among " + theta.str(), depth);
    best->candidates_tried = std::move(tried);
    return best;
  }

  CheckResult check_recv_used(const ChannelContext& ctx, const TermPtr& p, Channel offer,
                              const TypeMultiset& theta, int depth) {
    const TypeMultiset* ms = ctx.find(p->ch);
    if (!ms) return used_error(ctx, p, offer, depth);
    auto [bound, cont] = freshen_binder(p->aux, p->cont, ctx, offer);
    CheckResult best;
    std::vector<std::string> tried;
    for (const auto& t : ms->items()) {
      if (t->kind != TypeKind::Tensor) continue;
      tried.push_back(print_type(t));
      ChannelContext next = ctx;
      next.set(p->ch, TypeMultiset::of(t->right));
      next.set(bound, TypeMultiset::of(t->left));
      CheckResult err = check_term(next, cont, offer, theta, depth + 1);
      if (!err) return std::nullopt;
      keep_deeper(best, std::move(err));
    }
    if (tried.empty())
      return fail(p->span,
                  "receive on '" + p->ch.str() + "' requires a tensor among " + ms->str(), depth);
    best->candidates_tried = std::move(tried);
    return best;
  }

  CheckResult check_select_offer(const ChannelContext& ctx, const TermPtr& p, Channel offer,
                                 const TypeMultiset& theta, int depth) {
    CheckResult best;
    std::vector<std::string> tried;
    for (const auto& t : theta.items()) {
      if (t->kind != TypeKind::Internal) continue;
      const TypeBranch* br = find_branch(*t, p->label);
      if (!br) continue;
      tried.push_back(print_type(t));
      CheckResult err = check_term(ctx, p->cont, offer, TypeMultiset::of(br->type), depth + 1);
      if (!err) return std::nullopt;
      keep_deeper(best, std::move(err));
    }
    if (tried.empty())
      return fail(p->span,
                  "no internal choice among " + theta.str() + " has label '" + p->label + "'",
                  depth);
    best->candidates_tried = std::move(tried);
    return best;
  }

  CheckResult check_select_used(const ChannelContext& ctx, const TermPtr& p, Channel offer,
                                const TypeMultiset& theta, int depth) {
    const TypeMultiset* ms = ctx.find(p->ch);
    if (!ms) return used_error(ctx, p, offer, depth);
    CheckResult best;
    std::vector<std::string> tried;
    for (const auto& t : ms->items()) {
      if (t->kind != TypeKind::External) continue;
      const TypeBranch* br = find_branch(*t, p->label);
      if (!br) continue;
      tried.push_back(print_type(t));
      ChannelContext next = ctx;
      next.set(p->ch, TypeMultiset::of(br->type));
      CheckResult err = check_term(next, p->cont, offer, theta, depth + 1);
      if (!err) return std::nullopt;
      keep_deeper(best, std::move(err));
    }
    if (tried.empty())
      return fail(p->span,
                  "no external choice among " + ms->str() + " has label '" + p->label + "'",
                  depth);
    best->candidates_tried = std::move(tried);
    return best;
  }

  CheckResult check_case_offer(const ChannelContext& ctx, const TermPtr& p, Channel offer,
                               const TypeMultiset& theta, int depth) {
    CheckResult best;
    std::vector<std::string> tried;
    for (const auto& t : theta.items()) {
      if (t->kind != TypeKind::External) continue;
      if (!arms_cover(p->arms, t->branches)) continue;  // unused case arms are fine
      tried.push_back(print_type(t));
      CheckResult err;
      for (const auto& br : t->branches) {
        const TermPtr& arm = arm_body(p->arms, br.label);
        err = check_term(ctx, arm, offer, TypeMultiset::of(br.type), depth + 1);
        if (err) break;
      }
      if (!err) return std::nullopt;
      keep_deeper(best, std::move(err));
    }
    if (tried.empty())
      return fail(p->span,
                  "case on the offered channel matches no external choice among " + theta.str(),
                  depth);
    best->candidates_tried = std::move(tried);
    return best;
  }

  CheckResult check_case_used(const ChannelContext& ctx, const TermPtr& p, Channel offer,
                              const TypeMultiset& theta, int depth) {
    const TypeMultiset* ms = ctx.find(p->ch);
    if (!ms) return used_error(ctx, p, offer, depth);
    CheckResult best;
    std::vector<std::string> tried;
    for (const auto& t : ms->items()) {
      if (t->kind != TypeKind::Internal) continue;
      if (!arms_cover(p->arms, t->branches)) continue;
      tried.push_back(print_type(t));
      CheckResult err;
      for (const auto& br : t->branches) {
        ChannelContext next = ctx;
        next.set(p->ch, TypeMultiset::of(br.type));
        err = check_term(next, arm_body(p->arms, br.label), offer, theta, depth + 1);
        if (err) break;
      }
      if (!err) return std::nullopt;
      keep_deeper(best, std::move(err));
    }
    if (tried.empty())
      return fail(p->span, "case on '" + p->ch.str() + "' matches no internal choice among " +
                               ms->str() + " (missing branch?)",
                  depth);
    best->candidates_tried = std::move(tried);
    return best;
  }

  static bool arms_cover(const std::vector<CaseArm>& arms,
                         const std::vector<TypeBranch>& branches) {
    for (const auto& br : branches) {
      bool found = false;
      for (const auto& arm : arms)
        if (arm.label == br.label) found = true;
      if (!found) return false;
    }
    return true;
  }

  static const TermPtr& arm_body(const std::vector<CaseArm>& arms, const std::string& label) {
    for (const auto& arm : arms)
      if (arm.label == label) return arm.body;
    throw std::logic_error("case arm lookup after coverage check");
  }

  const Signature& sig_;
};

}  // namespace

CheckResult check(const Signature& sig, const ChannelContext& ctx, const TermPtr& p,
                  Channel offer, const TypeMultiset& theta) {
  Checker checker(sig);
  return checker.check_term(ctx, p, offer, theta, 0);
}

}  // namespace sill
