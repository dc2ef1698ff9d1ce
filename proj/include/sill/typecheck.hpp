#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sill/ast.hpp"
#include "sill/subtype.hpp"

namespace sill {

/// Linear typing context: each used channel carries a multiset of types, read
/// conjunctively. Every entry must be consumed exactly once.
class ChannelContext {
public:
  ChannelContext() = default;

  bool contains(Channel c) const { return entries_.count(c) > 0; }
  const TypeMultiset* find(Channel c) const;
  void set(Channel c, TypeMultiset ms) { entries_[c] = std::move(ms); }
  void remove(Channel c) { entries_.erase(c); }
  size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::map<Channel, TypeMultiset>& entries() const { return entries_; }

  std::string str() const;

private:
  std::map<Channel, TypeMultiset> entries_;
};

struct TypeError {
  std::string message;
  Span span;
  std::vector<std::string> candidates_tried;  // rendered types the checker backtracked over
  int depth = 0;                              // how deep in the term the failure occurred

  std::string render() const;
};

using CheckResult = std::optional<TypeError>;  // nullopt means well typed

/// Splits a linear context between two sub-terms by their free channels.
/// Fails when a channel is needed by both sides or by neither.
struct SplitResult {
  ChannelContext left, right;
  std::optional<TypeError> error;
};
SplitResult split_context(const ChannelContext& ctx, const std::set<Channel>& left_needs,
                          const std::set<Channel>& right_needs, Span sp);

/// Checks `p` offering `theta` along `offer` in context `ctx`. Invertible
/// rules on the multisets run eagerly first; the structural rule for the term
/// then picks a member of the relevant multiset, backtracking over choices.
/// Subtyping is consulted only for forwarding and for calls.
CheckResult check(const Signature& sig, const ChannelContext& ctx, const TermPtr& p,
                  Channel offer, const TypeMultiset& theta);

}  // namespace sill
