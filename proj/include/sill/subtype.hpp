#pragma once

#include <cstddef>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "sill/ast.hpp"

namespace sill {

/// Unordered collection of types kept in a canonical sorted order. Duplicates
/// are retained: types have nontrivial equality, so the rules never merge two
/// occurrences.
class TypeMultiset {
public:
  TypeMultiset() = default;
  explicit TypeMultiset(std::vector<TypePtr> items);
  static TypeMultiset of(TypePtr t);
  static TypeMultiset of(TypePtr a, TypePtr b);

  const std::vector<TypePtr>& items() const { return items_; }
  size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }

  /// Copy with the item at `index` replaced by `replacement` (flattening and
  /// unfolding rewrite one member into zero or more).
  TypeMultiset replaced(size_t index, const std::vector<TypePtr>& replacement) const;

  bool operator==(const TypeMultiset& other) const;
  size_t hash() const;
  std::string str() const;

private:
  std::vector<TypePtr> items_;  // sorted by type_compare
};

/// Subtyping comparisons already assumed along the current derivation path.
/// Re-encountering a pair closes the branch coinductively. Entries added
/// while exploring a failed structural candidate are rolled back so disproven
/// branches never leak assumptions.
class MemoTable {
public:
  bool contains(const TypeMultiset& l, const TypeMultiset& r) const;
  void insert(TypeMultiset l, TypeMultiset r);
  size_t mark() const { return trail_.size(); }
  void rollback(size_t mark);
  size_t size() const { return trail_.size(); }
  size_t peak() const { return peak_; }

private:
  struct Entry {
    TypeMultiset l, r;
    bool operator==(const Entry& o) const { return l == o.l && r == o.r; }
  };
  struct EntryHash {
    size_t operator()(const Entry& e) const { return e.l.hash() * 31 + e.r.hash(); }
  };
  std::vector<Entry> trail_;
  std::unordered_set<Entry, EntryHash> set_;
  size_t peak_ = 0;
};

/// Applies the six invertible rules to a fixpoint and returns the resulting
/// subgoals, every member structural. Meets flatten on the left and split the
/// goal on the right; joins do the opposite; names unfold on either side.
/// Non-branching rules run first; the result does not depend on the order.
std::vector<std::pair<TypeMultiset, TypeMultiset>> saturate(const Signature& sig,
                                                            const TypeMultiset& delta,
                                                            const TypeMultiset& theta);

/// For all-structural sides, enumerates every pair of one left and one right
/// member with the same constructor whose side condition holds, yielding that
/// candidate's premises as singleton-vs-singleton goals. Internal choice
/// requires the left label set within the right one; external choice the
/// reverse; the function arrow is contravariant in its argument.
std::vector<std::vector<std::pair<TypeMultiset, TypeMultiset>>> structural_step(
    const TypeMultiset& delta, const TypeMultiset& theta);

/// True when delta <= theta is coinductively derivable: the left side read as
/// an intersection, the right as a union.
bool decide(const Signature& sig, const TypeMultiset& delta, const TypeMultiset& theta,
            MemoTable& memo);

struct SubtypeStats {
  size_t memo_peak = 0;
};

bool subtype(const Signature& sig, const TypePtr& a, const TypePtr& b,
             SubtypeStats* stats = nullptr);

}  // namespace sill
