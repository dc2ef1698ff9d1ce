#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <sstream>

#include "sill/ast.hpp"
#include "sill/parse.hpp"

using namespace sill;

namespace {

Channel ch(const char* name) { return Channel::named(name); }

// Independent alpha-equivalence oracle: renders a term with bound channels as
// de Bruijn style indices and free channels by name.
void de_bruijn(const TermPtr& t, std::vector<Channel>& binders, std::ostream& os) {
  auto name = [&](Channel c) {
    for (size_t i = binders.size(); i-- > 0;)
      if (binders[i] == c) return "@" + std::to_string(binders.size() - 1 - i);
    return c.str();
  };
  switch (t->kind) {
    case TermKind::Spawn:
      os << "spawn(";
      binders.push_back(t->ch);
      de_bruijn(t->child, binders, os);
      os << ",";
      de_bruijn(t->cont, binders, os);
      binders.pop_back();
      os << ")";
      break;
    case TermKind::Fwd:
      os << "fwd(" << name(t->ch) << "," << name(t->aux) << ")";
      break;
    case TermKind::Close:
      os << "close(" << name(t->ch) << ")";
      break;
    case TermKind::Wait:
      os << "wait(" << name(t->ch) << ",";
      de_bruijn(t->cont, binders, os);
      os << ")";
      break;
    case TermKind::SendFresh:
      os << "send(" << name(t->ch) << ",";
      binders.push_back(t->aux);
      de_bruijn(t->child, binders, os);
      binders.pop_back();
      os << ",";
      de_bruijn(t->cont, binders, os);
      os << ")";
      break;
    case TermKind::Recv:
      os << "recv(" << name(t->ch) << ",";
      binders.push_back(t->aux);
      de_bruijn(t->cont, binders, os);
      binders.pop_back();
      os << ")";
      break;
    case TermKind::Select:
      os << "select(" << name(t->ch) << "," << t->label << ",";
      de_bruijn(t->cont, binders, os);
      os << ")";
      break;
    case TermKind::Case:
      os << "case(" << name(t->ch);
      for (const auto& arm : t->arms) {
        os << "," << arm.label << "=>";
        de_bruijn(arm.body, binders, os);
      }
      os << ")";
      break;
    case TermKind::Call:
      os << "call(" << t->label << ")";
      break;
    case TermKind::Drain:
      os << "drain(" << name(t->ch) << ")";
      break;
  }
}

std::string de_bruijn(const TermPtr& t) {
  std::vector<Channel> binders;
  std::ostringstream os;
  de_bruijn(t, binders, os);
  return os.str();
}

// Small random term generator for the structural properties.
TermPtr random_term(std::mt19937& rng, int depth) {
  Channel c = ch("c"), d = ch("d"), x = ch("x");
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 2 : 8);
  switch (pick(rng)) {
    case 0: return tm::close(c);
    case 1: return tm::fwd(c, d);
    case 2: return tm::call("f");
    case 3: return tm::wait(d, random_term(rng, depth - 1));
    case 4:
      return tm::spawn(x, rng() % 2 ? ty::name("Nat") : nullptr, random_term(rng, depth - 1),
                       random_term(rng, depth - 1));
    case 5: return tm::send_fresh(c, x, random_term(rng, depth - 1), random_term(rng, depth - 1));
    case 6: return tm::recv(x, c, random_term(rng, depth - 1));
    case 7: return tm::select(c, "l", random_term(rng, depth - 1));
    default:
      return tm::case_of(c, {{"a", random_term(rng, depth - 1)},
                             {"b", random_term(rng, depth - 1)}});
  }
}

Signature corpus() {
  Signature sig;
  sig.add_type({"Nat", ty::internal({{"zero", ty::end()}, {"succ", ty::name("Nat")}}), {}});
  sig.add_type({"Std", ty::join(ty::name("Empty"), ty::name("StdPos")), {}});
  sig.add_type({"Empty", ty::internal({{"eps", ty::end()}}), {}});
  sig.add_type(
      {"StdPos", ty::internal({{"one", ty::name("Std")}, {"zero", ty::name("StdPos")}}), {}});
  return sig;
}

}  // namespace

TEST_CASE("substitution replaces free occurrences") {
  TermPtr t = tm::fwd(ch("c"), ch("d"));
  CHECK(term_equal(subst_channel(t, ch("e"), ch("d")), tm::fwd(ch("c"), ch("e"))));
}

TEST_CASE("substitution leaves bound occurrences alone") {
  TermPtr body = tm::fwd(ch("e"), ch("x"));
  TermPtr t = tm::recv(ch("x"), ch("c"), body);
  CHECK(term_equal(subst_channel(t, ch("a"), ch("x")), t));
}

TEST_CASE("substitution avoids capture by renaming the binder") {
  // spawn a.(fwd a d); Q  with d := a  must not let the binder capture a
  TermPtr q = tm::close(ch("q"));
  TermPtr t = tm::spawn(ch("a"), ty::name("Nat"), tm::fwd(ch("a"), ch("d")), q);
  TermPtr got = subst_channel(t, ch("a"), ch("d"));
  TermPtr want =
      tm::spawn(ch("a2"), ty::name("Nat"), tm::fwd(ch("a2"), ch("a")), q);
  CHECK(de_bruijn(got) == de_bruijn(want));
  CHECK(alpha_equal(got, want));
  CHECK_FALSE(alpha_equal(got, t));
}

TEST_CASE("alpha canonicalization agrees with the de Bruijn oracle") {
  std::mt19937 rng(7);
  for (int i = 0; i < 200; ++i) {
    TermPtr a = random_term(rng, 4);
    // Rename one binder occurrence through substitution-free alpha variance:
    // canonical forms must match exactly when the oracle strings do.
    TermPtr b = random_term(rng, 4);
    CHECK(alpha_equal(a, b) == (de_bruijn(a) == de_bruijn(b)));
  }
}

TEST_CASE("erase strips spawn annotations and nothing else") {
  TermPtr inner = tm::close(ch("c"));
  TermPtr t = tm::spawn(ch("c"), ty::name("Nat"), inner, tm::close(ch("d")));
  TermPtr e = erase(t);
  CHECK(e->annotation == nullptr);
  CHECK(term_equal(e->child, inner));
  CHECK(term_equal(erase(tm::close(ch("c"))), tm::close(ch("c"))));
}

TEST_CASE("erase is idempotent and preserves free channels") {
  std::mt19937 rng(11);
  for (int i = 0; i < 200; ++i) {
    TermPtr t = random_term(rng, 4);
    TermPtr e = erase(t);
    CHECK(term_equal(erase(e), e));
    CHECK(free_channels(e) == free_channels(t));
  }
}

TEST_CASE("unfold returns the stored definition body") {
  Signature sig = corpus();
  CHECK(type_equal(unfold(sig, "Nat"),
                   ty::internal({{"zero", ty::end()}, {"succ", ty::name("Nat")}})));
  CHECK(type_equal(unfold(sig, "Std"), ty::join(ty::name("Empty"), ty::name("StdPos"))));
  CHECK_THROWS_AS(unfold(sig, "Missing"), UndefinedNameError);
}

TEST_CASE("free channels") {
  CHECK(free_channels(tm::fwd(ch("c"), ch("d"))) == std::set<Channel>{ch("c"), ch("d")});
  TermPtr t = tm::recv(ch("x"), ch("c"), tm::fwd(ch("e"), ch("x")));
  CHECK(free_channels(t) == std::set<Channel>{ch("c"), ch("e")});
  CHECK(free_channels(tm::close(ch("c"))) == std::set<Channel>{ch("c")});
}

TEST_CASE("branch order does not affect type equality") {
  TypePtr a = ty::internal({{"zero", ty::end()}, {"succ", ty::name("Nat")}});
  TypePtr b = ty::internal({{"succ", ty::name("Nat")}, {"zero", ty::end()}});
  CHECK(type_equal(a, b));
  CHECK(type_hash(a) == type_hash(b));
}

TEST_CASE("signatures reject duplicate names") {
  Signature sig;
  CHECK(sig.add_type({"Nat", ty::end(), {}}));
  CHECK_FALSE(sig.add_type({"Nat", ty::end(), {}}));
  CHECK_FALSE(sig.add_proc({"Nat", ch("c"), ty::end(), tm::close(ch("c")), 0, {}}));
}

TEST_CASE("substitution respects alpha equivalence") {
  std::mt19937 rng(13);
  for (int i = 0; i < 100; ++i) {
    TermPtr t = random_term(rng, 4);
    TermPtr canon = alpha_canonical(t);
    TermPtr s1 = subst_channel(t, ch("n"), ch("c"));
    TermPtr s2 = subst_channel(canon, ch("n"), ch("c"));
    CHECK(alpha_equal(s1, s2));
  }
}
