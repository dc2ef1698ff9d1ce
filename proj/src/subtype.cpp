#include "sill/subtype.hpp"

#include <algorithm>

#include "sill/print.hpp"

namespace sill {

TypeMultiset::TypeMultiset(std::vector<TypePtr> items) : items_(std::move(items)) {
  std::sort(items_.begin(), items_.end(),
            [](const TypePtr& a, const TypePtr& b) { return type_compare(a, b) < 0; });
}

TypeMultiset TypeMultiset::of(TypePtr t) { return TypeMultiset({std::move(t)}); }

TypeMultiset TypeMultiset::of(TypePtr a, TypePtr b) {
  return TypeMultiset({std::move(a), std::move(b)});
}

TypeMultiset TypeMultiset::replaced(size_t index, const std::vector<TypePtr>& replacement) const {
  std::vector<TypePtr> next;
  next.reserve(items_.size() - 1 + replacement.size());
  for (size_t i = 0; i < items_.size(); ++i)
    if (i != index) next.push_back(items_[i]);
  next.insert(next.end(), replacement.begin(), replacement.end());
  return TypeMultiset(std::move(next));
}

bool TypeMultiset::operator==(const TypeMultiset& other) const {
  if (items_.size() != other.items_.size()) return false;
  for (size_t i = 0; i < items_.size(); ++i)
    if (!type_equal(items_[i], other.items_[i])) return false;
  return true;
}

size_t TypeMultiset::hash() const {
  size_t h = 0x51'11;
  for (const auto& t : items_) h = h * 1000003u ^ type_hash(t);
  return h;
}

std::string TypeMultiset::str() const {
  std::string out = "{";
  for (size_t i = 0; i < items_.size(); ++i) {
    if (i) out += ", ";
    out += print_type(items_[i]);
  }
  return out + "}";
}

bool MemoTable::contains(const TypeMultiset& l, const TypeMultiset& r) const {
  return set_.count(Entry{l, r}) > 0;
}

void MemoTable::insert(TypeMultiset l, TypeMultiset r) {
  Entry e{std::move(l), std::move(r)};
  if (set_.insert(e).second) {
    trail_.push_back(std::move(e));
    peak_ = std::max(peak_, trail_.size());
  }
}

void MemoTable::rollback(size_t mark) {
  while (trail_.size() > mark) {
    set_.erase(trail_.back());
    trail_.pop_back();
  }
}

namespace {

size_t find_non_structural(const TypeMultiset& ms) {
  for (size_t i = 0; i < ms.size(); ++i)
    if (!is_structural(ms.items()[i])) return i;
  return ms.size();
}

// Names unfold, meets flatten on the left, joins flatten on the right. These
// rewrite a single goal in place.
bool apply_non_branching(const Signature& sig, TypeMultiset& delta, TypeMultiset& theta) {
  for (size_t i = 0; i < delta.size(); ++i) {
    const TypePtr& t = delta.items()[i];
    if (t->kind == TypeKind::Name) {
      delta = delta.replaced(i, {unfold(sig, t->name)});
      return true;
    }
    if (t->kind == TypeKind::Meet) {
      delta = delta.replaced(i, {t->left, t->right});
      return true;
    }
  }
  for (size_t i = 0; i < theta.size(); ++i) {
    const TypePtr& t = theta.items()[i];
    if (t->kind == TypeKind::Name) {
      theta = theta.replaced(i, {unfold(sig, t->name)});
      return true;
    }
    if (t->kind == TypeKind::Join) {
      theta = theta.replaced(i, {t->left, t->right});
      return true;
    }
  }
  return false;
}

void saturate_rec(const Signature& sig, TypeMultiset delta, TypeMultiset theta,
                  std::vector<std::pair<TypeMultiset, TypeMultiset>>& out, int depth) {
  if (depth > 10000)
    throw std::logic_error("saturation did not converge; is the signature contractive?");
  while (apply_non_branching(sig, delta, theta)) {
  }
  // Joins on the left split the goal in two, as do meets on the right.
  size_t i = find_non_structural(delta);
  if (i < delta.size()) {
    const TypePtr& t = delta.items()[i];
    saturate_rec(sig, delta.replaced(i, {t->left}), theta, out, depth + 1);
    saturate_rec(sig, delta.replaced(i, {t->right}), theta, out, depth + 1);
    return;
  }
  size_t j = find_non_structural(theta);
  if (j < theta.size()) {
    const TypePtr& t = theta.items()[j];
    saturate_rec(sig, delta, theta.replaced(j, {t->left}), out, depth + 1);
    saturate_rec(sig, delta, theta.replaced(j, {t->right}), out, depth + 1);
    return;
  }
  out.emplace_back(std::move(delta), std::move(theta));
}

const TypeBranch* find_branch_vec(const std::vector<TypeBranch>& branches,
                                  const std::string& label) {
  for (const auto& br : branches)
    if (br.label == label) return &br;
  return nullptr;
}

bool label_subset(const std::vector<TypeBranch>& sub, const std::vector<TypeBranch>& super) {
  for (const auto& br : sub)
    if (!find_branch_vec(super, br.label)) return false;
  return true;
}

}  // namespace

std::vector<std::pair<TypeMultiset, TypeMultiset>> saturate(const Signature& sig,
                                                            const TypeMultiset& delta,
                                                            const TypeMultiset& theta) {
  std::vector<std::pair<TypeMultiset, TypeMultiset>> out;
  saturate_rec(sig, delta, theta, out, 0);
  return out;
}

std::vector<std::vector<std::pair<TypeMultiset, TypeMultiset>>> structural_step(
    const TypeMultiset& delta, const TypeMultiset& theta) {
  using Premises = std::vector<std::pair<TypeMultiset, TypeMultiset>>;
  std::vector<Premises> out;
  for (const auto& l : delta.items()) {
    for (const auto& r : theta.items()) {
      if (l->kind != r->kind) continue;
      switch (l->kind) {
        case TypeKind::End:
          out.push_back({});
          break;
        case TypeKind::Tensor:
          out.push_back({{TypeMultiset::of(l->left), TypeMultiset::of(r->left)},
                         {TypeMultiset::of(l->right), TypeMultiset::of(r->right)}});
          break;
        case TypeKind::Lolli:  // contravariant argument
          out.push_back({{TypeMultiset::of(r->left), TypeMultiset::of(l->left)},
                         {TypeMultiset::of(l->right), TypeMultiset::of(r->right)}});
          break;
        case TypeKind::Internal: {
          if (!label_subset(l->branches, r->branches)) break;
          Premises prems;
          for (const auto& br : l->branches)
            prems.push_back({TypeMultiset::of(br.type),
                             TypeMultiset::of(find_branch_vec(r->branches, br.label)->type)});
          out.push_back(std::move(prems));
          break;
        }
        case TypeKind::External: {
          if (!label_subset(r->branches, l->branches)) break;
          Premises prems;
          for (const auto& br : r->branches)
            prems.push_back({TypeMultiset::of(find_branch_vec(l->branches, br.label)->type),
                             TypeMultiset::of(br.type)});
          out.push_back(std::move(prems));
          break;
        }
        default:
          break;  // non-structural members never reach here
      }
    }
  }
  return out;
}

bool decide(const Signature& sig, const TypeMultiset& delta, const TypeMultiset& theta,
            MemoTable& memo) {
  if (memo.contains(delta, theta)) return true;
  memo.insert(delta, theta);
  for (const auto& [ds, ts] : saturate(sig, delta, theta)) {
    bool goal_ok = false;
    for (const auto& premises : structural_step(ds, ts)) {
      size_t mark = memo.mark();
      bool all = true;
      for (const auto& [pd, pt] : premises) {
        if (!decide(sig, pd, pt, memo)) {
          all = false;
          break;
        }
      }
      if (all) {
        goal_ok = true;
        break;
      }
      memo.rollback(mark);
    }
    if (!goal_ok) return false;
  }
  return true;
}

bool subtype(const Signature& sig, const TypePtr& a, const TypePtr& b, SubtypeStats* stats) {
  MemoTable memo;
  bool ok = decide(sig, TypeMultiset::of(a), TypeMultiset::of(b), memo);
  if (stats) stats->memo_peak = memo.peak();
  return ok;
}

}  // namespace sill
