#include "sill/print.hpp"

#include <sstream>

namespace sill {

namespace {

// Binding strength, loosest first: \/ < /\ < -o < * < atom.
enum Level { kJoin = 0, kMeet = 1, kLolli = 2, kTensor = 3, kAtom = 4 };

void print_type_rec(std::ostream& os, const TypePtr& t, int min_level) {
  auto binary = [&](int level, const char* op) {
    bool parens = level < min_level;
    if (parens) os << "(";
    print_type_rec(os, t->left, level + 1);  // right-associative
    os << " " << op << " ";
    print_type_rec(os, t->right, level);
    if (parens) os << ")";
  };
  auto choice = [&](const char* head) {
    os << head << "{";
    bool first = true;
    for (const auto& br : t->branches) {
      if (!first) os << ", ";
      first = false;
      os << br.label << ": ";
      print_type_rec(os, br.type, kJoin);
    }
    os << "}";
  };
  switch (t->kind) {
    case TypeKind::End: os << "1"; break;
    case TypeKind::Tensor: binary(kTensor, "*"); break;
    case TypeKind::Lolli: binary(kLolli, "-o"); break;
    case TypeKind::Meet: binary(kMeet, "/\\"); break;
    case TypeKind::Join: binary(kJoin, "\\/"); break;
    case TypeKind::Internal: choice("+"); break;
    case TypeKind::External: choice("&"); break;
    case TypeKind::Name: os << t->name; break;
  }
}

void print_term_rec(std::ostream& os, const TermPtr& t) {
  switch (t->kind) {
    case TermKind::Spawn:
      os << t->ch.str();
      if (t->annotation) os << " : " << print_type(t->annotation);
      if (t->child->kind == TermKind::Call) {
        os << " <- " << t->child->label << "; ";
      } else {
        os << " <- (";
        print_term_rec(os, t->child);
        os << "); ";
      }
      print_term_rec(os, t->cont);
      break;
    case TermKind::Fwd:
      os << t->ch.str() << " <- " << t->aux.str();
      break;
    case TermKind::Close:
      os << "close " << t->ch.str();
      break;
    case TermKind::Wait:
      os << "wait " << t->ch.str() << "; ";
      print_term_rec(os, t->cont);
      break;
    case TermKind::SendFresh:
      os << "send " << t->ch.str() << " (" << t->aux.str() << " <- ";
      print_term_rec(os, t->child);
      os << "); ";
      print_term_rec(os, t->cont);
      break;
    case TermKind::Recv:
      os << t->aux.str() << " <- recv " << t->ch.str() << "; ";
      print_term_rec(os, t->cont);
      break;
    case TermKind::Select:
      os << t->ch.str() << "." << t->label << "; ";
      print_term_rec(os, t->cont);
      break;
    case TermKind::Case: {
      os << "case " << t->ch.str() << " of { ";
      bool first = true;
      for (const auto& arm : t->arms) {
        if (!first) os << " | ";
        first = false;
        os << arm.label << " => ";
        print_term_rec(os, arm.body);
      }
      os << " }";
      break;
    }
    case TermKind::Call:
      os << t->label;  // not reachable from parsed signatures
      break;
    case TermKind::Drain:
      os << "drain " << t->ch.str();  // runtime-only
      break;
  }
}

}  // namespace

std::string print_type(const TypePtr& t) {
  std::ostringstream os;
  print_type_rec(os, t, kJoin);
  return os.str();
}

std::string print_term(const TermPtr& t) {
  std::ostringstream os;
  print_term_rec(os, t);
  return os.str();
}

std::string print_signature(const Signature& sig) {
  std::ostringstream os;
  // Interleave declarations back in their original order.
  size_t ti = 0, pi = 0;
  const auto& types = sig.type_decls();
  const auto& procs = sig.proc_decls();
  auto next_is_type = [&] {
    if (ti >= types.size()) return false;
    if (pi >= procs.size()) return true;
    const Span& a = types[ti].span;
    const Span& b = procs[pi].span;
    return a.line < b.line || (a.line == b.line && a.col <= b.col);
  };
  while (ti < types.size() || pi < procs.size()) {
    if (next_is_type()) {
      os << "type " << types[ti].name << " = " << print_type(types[ti].body) << "\n";
      ++ti;
    } else {
      const ProcDecl& p = procs[pi];
      os << "proc " << p.name << " : " << print_type(p.declared) << "\n"
         << p.offer.str() << " <- " << p.name << " = " << print_term(p.body) << "\n";
      ++pi;
    }
  }
  return os.str();
}

}  // namespace sill
