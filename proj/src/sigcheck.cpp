#include "sill/sigcheck.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>

#include "sill/typecheck.hpp"

namespace sill {

std::string render(const Diagnostic& d) {
  if (d.span.line == 0) return d.message;
  return std::to_string(d.span.line) + ":" + std::to_string(d.span.col) + ": " + d.message;
}

namespace {

void collect_type_names(const TypePtr& t, std::set<std::string>& out) {
  if (!t) return;
  switch (t->kind) {
    case TypeKind::Name:
      out.insert(t->name);
      break;
    case TypeKind::Tensor:
    case TypeKind::Lolli:
    case TypeKind::Meet:
    case TypeKind::Join:
      collect_type_names(t->left, out);
      collect_type_names(t->right, out);
      break;
    case TypeKind::Internal:
    case TypeKind::External:
      for (const auto& br : t->branches) collect_type_names(br.type, out);
      break;
    case TypeKind::End:
      break;
  }
}

void collect_term_names(const TermPtr& p, std::set<std::string>& types,
                        std::set<std::string>& calls) {
  if (!p) return;
  if (p->kind == TermKind::Call) calls.insert(p->label);
  if (p->annotation) collect_type_names(p->annotation, types);
  collect_term_names(p->child, types, calls);
  collect_term_names(p->cont, types, calls);
  for (const auto& arm : p->arms) collect_term_names(arm.body, types, calls);
}

// Names reachable from a type through meets, joins and other names only;
// structural constructors stop the walk.
void top_names(const TypePtr& t, std::set<std::string>& out) {
  switch (t->kind) {
    case TypeKind::Name:
      out.insert(t->name);
      break;
    case TypeKind::Meet:
    case TypeKind::Join:
      top_names(t->left, out);
      top_names(t->right, out);
      break;
    default:
      break;
  }
}

}  // namespace

std::vector<Diagnostic> check_names(const Signature& sig) {
  std::vector<Diagnostic> out;
  auto check_types = [&](const std::set<std::string>& names, Span sp, const std::string& where) {
    for (const auto& n : names)
      if (!sig.find_type(n))
        out.push_back({"unresolved type name '" + n + "' in " + where, sp});
  };
  for (const auto& td : sig.type_decls()) {
    std::set<std::string> names;
    collect_type_names(td.body, names);
    check_types(names, td.span, "type '" + td.name + "'");
  }
  for (const auto& pd : sig.proc_decls()) {
    std::set<std::string> types, calls;
    collect_type_names(pd.declared, types);
    collect_term_names(pd.body, types, calls);
    check_types(types, pd.span, "process '" + pd.name + "'");
    for (const auto& c : calls)
      if (!sig.find_proc(c))
        out.push_back({"unresolved process name '" + c + "' in '" + pd.name + "'", pd.span});
  }
  return out;
}

ContractivenessReport check_contractive(const Signature& sig) {
  // Cycle-freeness of the name dependency graph restricted to edges that pass
  // only through meets and joins. Intersections and unions are not structural,
  // so they do not make a definition productive.
  const auto& decls = sig.type_decls();
  std::map<std::string, size_t> index;
  for (size_t i = 0; i < decls.size(); ++i) index[decls[i].name] = i;

  std::vector<std::vector<size_t>> succ(decls.size());
  for (size_t i = 0; i < decls.size(); ++i) {
    std::set<std::string> tops;
    top_names(decls[i].body, tops);
    for (const auto& n : tops) {
      auto it = index.find(n);
      if (it != index.end()) succ[i].push_back(it->second);
    }
  }

  // Tarjan strongly connected components over the non-structural edges.
  std::vector<int> comp(decls.size(), -1), low(decls.size()), num(decls.size(), -1);
  std::vector<size_t> stack;
  std::vector<bool> on_stack(decls.size(), false);
  std::vector<std::vector<size_t>> components;
  int counter = 0;
  std::function<void(size_t)> strongconnect = [&](size_t v) {
    num[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack[v] = true;
    for (size_t w : succ[v]) {
      if (num[w] < 0) {
        strongconnect(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack[w]) {
        low[v] = std::min(low[v], num[w]);
      }
    }
    if (low[v] == num[v]) {
      std::vector<size_t> members;
      while (true) {
        size_t w = stack.back();
        stack.pop_back();
        on_stack[w] = false;
        comp[w] = static_cast<int>(components.size());
        members.push_back(w);
        if (w == v) break;
      }
      components.push_back(std::move(members));
    }
  };
  for (size_t v = 0; v < decls.size(); ++v)
    if (num[v] < 0) strongconnect(v);

  ContractivenessReport report;
  for (auto& members : components) {
    bool cyclic = members.size() > 1;
    if (members.size() == 1) {
      size_t v = members[0];
      cyclic = std::count(succ[v].begin(), succ[v].end(), v) > 0;
    }
    if (!cyclic) continue;
    std::sort(members.begin(), members.end());  // declaration order
    // Walk the component from its first declared member, following
    // non-structural edges until the walk would revisit a name.
    std::vector<std::string> cycle;
    std::set<size_t> in_comp(members.begin(), members.end());
    std::set<size_t> visited;
    size_t cur = members[0];
    while (visited.insert(cur).second) {
      cycle.push_back(decls[cur].name);
      bool advanced = false;
      for (size_t w : succ[cur]) {
        if (in_comp.count(w) && !visited.count(w)) {
          cur = w;
          advanced = true;
          break;
        }
      }
      if (!advanced) break;
    }
    report.offenders.push_back({decls[members[0]].name, std::move(cycle)});
  }
  std::sort(report.offenders.begin(), report.offenders.end(),
            [](const auto& a, const auto& b) { return a.name < b.name; });
  report.ok = report.offenders.empty();
  return report;
}

std::vector<Diagnostic> check_signature(const Signature& sig) {
  std::vector<Diagnostic> out = check_names(sig);
  if (!out.empty()) return out;

  ContractivenessReport contractive = check_contractive(sig);
  if (!contractive.ok) {
    for (const auto& off : contractive.offenders) {
      std::string path;
      for (const auto& n : off.cycle) path += (path.empty() ? "" : " -> ") + n;
      Span sp = sig.find_type(off.name) ? sig.find_type(off.name)->span : Span{};
      out.push_back({"type '" + off.name + "' is not contractive (cycle: " + path + ")", sp});
    }
    return out;  // unfolding non-contractive definitions would not terminate
  }

  for (const auto& pd : sig.proc_decls()) {
    CheckResult err =
        check(sig, ChannelContext{}, pd.body, pd.offer, TypeMultiset::of(pd.declared));
    if (err) {
      Span sp = err->span.line ? err->span : pd.span;
      out.push_back({"in process '" + pd.name + "': " + err->render(), sp});
    }
  }
  return out;
}

}  // namespace sill
