#include "sill/parse.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <utility>

namespace sill {

namespace {

// ---------------------------------------------------------------------------
// Lexer

enum class Tok : uint8_t {
  Ident, GenName, Number,
  KwType, KwProc, KwClose, KwWait, KwSend, KwRecv, KwCase, KwOf,
  Eq, Plus, Amp, LBrace, RBrace, LParen, RParen, Comma, Colon, Semi, Dot, Bar,
  Star, LArrow, LolliArrow, FatArrow, MeetOp, JoinOp,
  Eof,
};

const char* tok_name(Tok t) {
  switch (t) {
    case Tok::Ident: return "identifier";
    case Tok::GenName: return "generated name";
    case Tok::Number: return "number";
    case Tok::KwType: return "'type'";
    case Tok::KwProc: return "'proc'";
    case Tok::KwClose: return "'close'";
    case Tok::KwWait: return "'wait'";
    case Tok::KwSend: return "'send'";
    case Tok::KwRecv: return "'recv'";
    case Tok::KwCase: return "'case'";
    case Tok::KwOf: return "'of'";
    case Tok::Eq: return "'='";
    case Tok::Plus: return "'+'";
    case Tok::Amp: return "'&'";
    case Tok::LBrace: return "'{'";
    case Tok::RBrace: return "'}'";
    case Tok::LParen: return "'('";
    case Tok::RParen: return "')'";
    case Tok::Comma: return "','";
    case Tok::Colon: return "':'";
    case Tok::Semi: return "';'";
    case Tok::Dot: return "'.'";
    case Tok::Bar: return "'|'";
    case Tok::Star: return "'*'";
    case Tok::LArrow: return "'<-'";
    case Tok::LolliArrow: return "'-o'";
    case Tok::FatArrow: return "'=>'";
    case Tok::MeetOp: return "'/\\'";
    case Tok::JoinOp: return "'\\/'";
    case Tok::Eof: return "end of input";
  }
  return "?";
}

struct Token {
  Tok kind;
  std::string text;
  Span span;
};

std::vector<Token> lex(std::string_view src, NameSupply& names) {
  std::vector<Token> out;
  size_t i = 0;
  int line = 1, col = 1;
  auto here = [&] { return Span{line, col}; };
  auto advance = [&](size_t n) {
    for (size_t k = 0; k < n; ++k) {
      if (src[i] == '\n') { ++line; col = 1; } else { ++col; }
      ++i;
    }
  };
  auto peek = [&](size_t off) { return i + off < src.size() ? src[i + off] : '\0'; };

  while (i < src.size()) {
    char c = src[i];
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') { advance(1); continue; }
    if (c == '-' && peek(1) == '-') {  // line comment
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    Span sp = here();
    auto push = [&](Tok t, size_t n) {
      out.push_back({t, std::string(src.substr(i, n)), sp});
      advance(n);
    };
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t n = 1;
      while (std::isalnum(static_cast<unsigned char>(peek(n))) || peek(n) == '_' ||
             peek(n) == '\'')
        ++n;
      std::string word(src.substr(i, n));
      static const std::map<std::string, Tok> keywords = {
          {"type", Tok::KwType}, {"proc", Tok::KwProc},   {"close", Tok::KwClose},
          {"wait", Tok::KwWait}, {"send", Tok::KwSend},   {"recv", Tok::KwRecv},
          {"case", Tok::KwCase}, {"of", Tok::KwOf},
      };
      auto kw = keywords.find(word);
      push(kw == keywords.end() ? Tok::Ident : kw->second, n);
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t n = 1;
      while (std::isdigit(static_cast<unsigned char>(peek(n)))) ++n;
      push(Tok::Number, n);
      continue;
    }
    switch (c) {
      case '%': {
        size_t n = 1;
        while (std::isdigit(static_cast<unsigned char>(peek(n)))) ++n;
        if (n == 1) throw ParseError("expected digits after '%'", sp);
        names.reserve(static_cast<uint32_t>(std::stoul(std::string(src.substr(i + 1, n - 1)))));
        push(Tok::GenName, n);
        continue;
      }
      case '=': peek(1) == '>' ? push(Tok::FatArrow, 2) : push(Tok::Eq, 1); continue;
      case '<':
        if (peek(1) != '-') throw ParseError("expected '<-'", sp);
        push(Tok::LArrow, 2);
        continue;
      case '-':
        if (peek(1) != 'o') throw ParseError("expected '-o' or '--'", sp);
        push(Tok::LolliArrow, 2);
        continue;
      case '/':
        if (peek(1) != '\\') throw ParseError("expected '/\\'", sp);
        push(Tok::MeetOp, 2);
        continue;
      case '\\':
        if (peek(1) != '/') throw ParseError("expected '\\/'", sp);
        push(Tok::JoinOp, 2);
        continue;
      case '+': push(Tok::Plus, 1); continue;
      case '&': push(Tok::Amp, 1); continue;
      case '{': push(Tok::LBrace, 1); continue;
      case '}': push(Tok::RBrace, 1); continue;
      case '(': push(Tok::LParen, 1); continue;
      case ')': push(Tok::RParen, 1); continue;
      case ',': push(Tok::Comma, 1); continue;
      case ':': push(Tok::Colon, 1); continue;
      case ';': push(Tok::Semi, 1); continue;
      case '.': push(Tok::Dot, 1); continue;
      case '|': push(Tok::Bar, 1); continue;
      case '*': push(Tok::Star, 1); continue;
      default:
        throw ParseError(std::string("unexpected character '") + c + "'", sp);
    }
  }
  out.push_back({Tok::Eof, "", here()});
  return out;
}

// ---------------------------------------------------------------------------
// Surface process tree, before call/forward resolution

struct SurfaceProc;
using SP = std::unique_ptr<SurfaceProc>;

struct SurfaceProc {
  enum Kind { Close, Wait, Send, Recv, Select, Case, Cut, Link } kind;
  Span span;
  Channel a, b;       // per-kind subjects and binders
  TypePtr ann;        // Cut / Link annotation
  std::string label;  // Select label
  std::string head;   // Link callee-or-channel
  std::vector<Channel> args;
  std::vector<std::pair<Channel, Span>> arg_spans;
  SP child, cont;
  std::vector<std::pair<std::string, SP>> arms;
};

// ---------------------------------------------------------------------------
// Parser

class Parser {
public:
  Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  const Token& peek(size_t off = 0) const {
    size_t i = pos_ + off;
    return i < toks_.size() ? toks_[i] : toks_.back();
  }
  bool at(Tok t) const { return peek().kind == t; }
  Token take() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }
  Token expect(Tok t) {
    if (!at(t))
      throw ParseError(std::string("expected ") + tok_name(t) + ", found " +
                           tok_name(peek().kind),
                       peek().span);
    return take();
  }
  std::string ident() { return expect(Tok::Ident).text; }

  bool at_channel() const { return at(Tok::Ident) || at(Tok::GenName); }
  std::pair<Channel, Span> channel() {
    if (!at_channel())
      throw ParseError(std::string("expected channel name, found ") + tok_name(peek().kind),
                       peek().span);
    Token t = take();
    return {Channel::named(t.text), t.span};
  }

  // Types. Binding strength, loosest first: \/ < /\ < -o < *.
  TypePtr parse_type_expr() {
    TypePtr left = parse_isect();
    if (at(Tok::JoinOp)) {
      take();
      return ty::join(std::move(left), parse_type_expr());
    }
    return left;
  }

  TypePtr parse_isect() {
    TypePtr left = parse_arrow();
    if (at(Tok::MeetOp)) {
      take();
      return ty::meet(std::move(left), parse_isect());
    }
    return left;
  }

  TypePtr parse_arrow() {
    TypePtr left = parse_tensor();
    if (at(Tok::LolliArrow)) {
      take();
      return ty::lolli(std::move(left), parse_arrow());
    }
    return left;
  }

  TypePtr parse_tensor() {
    TypePtr left = parse_atom();
    if (at(Tok::Star)) {
      take();
      return ty::tensor(std::move(left), parse_tensor());
    }
    return left;
  }

  TypePtr parse_atom() {
    Span sp = peek().span;
    switch (peek().kind) {
      case Tok::Number: {
        Token t = take();
        if (t.text != "1") throw ParseError("the only numeric type is '1'", sp);
        return ty::end();
      }
      case Tok::Ident:
        return ty::name(take().text);
      case Tok::Plus:
      case Tok::Amp: {
        bool internal = take().kind == Tok::Plus;
        expect(Tok::LBrace);
        std::vector<TypeBranch> branches;
        std::set<std::string> seen;
        while (true) {
          Span lsp = peek().span;
          std::string label = ident();
          if (!seen.insert(label).second)
            throw ParseError("duplicate branch label '" + label + "'", lsp);
          expect(Tok::Colon);
          branches.push_back({std::move(label), parse_type_expr()});
          if (at(Tok::Comma)) { take(); continue; }
          break;
        }
        expect(Tok::RBrace);
        return internal ? ty::internal(std::move(branches)) : ty::external(std::move(branches));
      }
      case Tok::LParen: {
        take();
        TypePtr t = parse_type_expr();
        expect(Tok::RParen);
        return t;
      }
      default:
        throw ParseError(std::string("expected a type, found ") + tok_name(peek().kind), sp);
    }
  }

  // Processes (surface form).
  SP parse_process() {
    Span sp = peek().span;
    switch (peek().kind) {
      case Tok::KwClose: {
        take();
        auto p = node(SurfaceProc::Close, sp);
        p->a = channel().first;
        return p;
      }
      case Tok::KwWait: {
        take();
        auto p = node(SurfaceProc::Wait, sp);
        p->a = channel().first;
        expect(Tok::Semi);
        p->cont = parse_process();
        return p;
      }
      case Tok::KwSend: {
        take();
        auto p = node(SurfaceProc::Send, sp);
        p->a = channel().first;
        expect(Tok::LParen);
        p->b = channel().first;
        expect(Tok::LArrow);
        p->child = parse_process();
        expect(Tok::RParen);
        expect(Tok::Semi);
        p->cont = parse_process();
        return p;
      }
      case Tok::KwCase: {
        take();
        auto p = node(SurfaceProc::Case, sp);
        p->a = channel().first;
        expect(Tok::KwOf);
        expect(Tok::LBrace);
        std::set<std::string> seen;
        while (true) {
          Span lsp = peek().span;
          std::string label = ident();
          if (!seen.insert(label).second)
            throw ParseError("duplicate case label '" + label + "'", lsp);
          expect(Tok::FatArrow);
          p->arms.emplace_back(std::move(label), parse_process());
          if (at(Tok::Bar)) { take(); continue; }
          break;
        }
        expect(Tok::RBrace);
        return p;
      }
      case Tok::Ident:
      case Tok::GenName: {
        auto [ch, chsp] = channel();
        if (at(Tok::Dot)) {
          take();
          auto p = node(SurfaceProc::Select, sp);
          p->a = ch;
          p->label = ident();
          expect(Tok::Semi);
          p->cont = parse_process();
          return p;
        }
        TypePtr ann;
        if (at(Tok::Colon)) {
          take();
          ann = parse_type_expr();
        }
        expect(Tok::LArrow);
        if (at(Tok::KwRecv)) {
          if (ann) throw ParseError("a receive cannot carry a type annotation", sp);
          take();
          auto p = node(SurfaceProc::Recv, sp);
          p->b = ch;  // bound name
          p->a = channel().first;
          expect(Tok::Semi);
          p->cont = parse_process();
          return p;
        }
        if (at(Tok::LParen)) {
          take();
          auto p = node(SurfaceProc::Cut, sp);
          p->a = ch;
          p->ann = std::move(ann);
          p->child = parse_process();
          expect(Tok::RParen);
          expect(Tok::Semi);
          p->cont = parse_process();
          return p;
        }
        // Forward, or a call with optional arguments and continuation.
        auto p = node(SurfaceProc::Link, sp);
        p->a = ch;
        p->ann = std::move(ann);
        Token headTok = peek();
        if (!at_channel())
          throw ParseError(std::string("expected a process or channel name, found ") +
                               tok_name(headTok.kind),
                           headTok.span);
        take();
        p->head = headTok.text;
        while (at_channel()) {
          auto [arg, asp] = channel();
          p->args.push_back(arg);
          p->arg_spans.push_back({arg, asp});
        }
        if (at(Tok::Semi)) {
          take();
          p->cont = parse_process();
        }
        return p;
      }
      default:
        throw ParseError(std::string("expected a process, found ") + tok_name(peek().kind), sp);
    }
  }

private:
  static SP node(SurfaceProc::Kind k, Span sp) {
    auto p = std::make_unique<SurfaceProc>();
    p->kind = k;
    p->span = sp;
    return p;
  }

  std::vector<Token> toks_;
  size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// Desugaring

struct SurfaceDecl {
  bool is_type;
  std::string name;
  Span span;
  TypePtr type;  // typedef body or declared process type
  Channel offer;
  std::vector<Channel> params;
  SP body;
};

class Desugarer {
public:
  Desugarer(const std::map<std::string, size_t>& arities, NameSupply& names)
      : arities_(arities), names_(names) {}

  TermPtr run(const SurfaceProc& p, std::set<Channel>& scope) {
    switch (p.kind) {
      case SurfaceProc::Close:
        require_bound(p.a, p.span, scope);
        return tm::close(p.a, p.span);
      case SurfaceProc::Wait:
        require_bound(p.a, p.span, scope);
        return tm::wait(p.a, run(*p.cont, scope), p.span);
      case SurfaceProc::Send: {
        require_bound(p.a, p.span, scope);
        TermPtr payload = with_bound(p.b, scope, [&] { return run(*p.child, scope); });
        return tm::send_fresh(p.a, p.b, payload, run(*p.cont, scope), p.span);
      }
      case SurfaceProc::Recv: {
        require_bound(p.a, p.span, scope);
        TermPtr cont = with_bound(p.b, scope, [&] { return run(*p.cont, scope); });
        return tm::recv(p.b, p.a, cont, p.span);
      }
      case SurfaceProc::Select:
        require_bound(p.a, p.span, scope);
        return tm::select(p.a, p.label, run(*p.cont, scope), p.span);
      case SurfaceProc::Case: {
        require_bound(p.a, p.span, scope);
        std::vector<CaseArm> arms;
        for (const auto& [label, body] : p.arms) arms.push_back({label, run(*body, scope)});
        return tm::case_of(p.a, std::move(arms), p.span);
      }
      case SurfaceProc::Cut: {
        TermPtr child = with_bound(p.a, scope, [&] { return run(*p.child, scope); });
        TermPtr cont = with_bound(p.a, scope, [&] { return run(*p.cont, scope); });
        return tm::spawn(p.a, p.ann, child, cont, p.span);
      }
      case SurfaceProc::Link:
        return run_link(p, scope);
    }
    throw std::logic_error("unreachable");
  }

private:
  TermPtr run_link(const SurfaceProc& p, std::set<Channel>& scope) {
    Channel head = Channel::named(p.head);
    if (scope.count(head)) {  // a channel in scope shadows any definition
      if (!p.args.empty())
        throw ParseError("'" + p.head + "' is a channel here and cannot take arguments", p.span);
      if (p.ann) throw ParseError("forwarding cannot carry a type annotation", p.span);
      if (p.cont) throw ParseError("forwarding has no continuation", p.span);
      return tm::fwd(p.a, head, p.span);
    }
    auto it = arities_.find(p.head);
    if (it == arities_.end())
      throw ParseError("'" + p.head + "' is neither a channel in scope nor a defined process",
                       p.span);
    // A bare call is a cut at the definition's full type; the process then
    // sends any arguments itself. Passing arguments engages the sugar, which
    // must match the definition's parameter list exactly.
    if (!p.args.empty() && p.args.size() != it->second)
      throw ParseError("process '" + p.head + "' expects " + std::to_string(it->second) +
                           " argument(s), got " + std::to_string(p.args.size()),
                       p.span);
    for (const auto& [arg, asp] : p.arg_spans)
      if (!scope.count(arg)) throw ParseError("unbound channel '" + arg.str() + "'", asp);
    if (p.cont) {
      TermPtr cont = with_bound(p.a, scope, [&] { return run(*p.cont, scope); });
      if (p.args.empty()) return tm::spawn(p.a, p.ann, tm::call(p.head, p.span), cont, p.span);
      if (p.ann)
        throw ParseError("a call with arguments cannot carry a type annotation", p.span);
      return desugar_call(p.head, p.args, p.a, false, cont, names_, p.span);
    }
    if (p.ann) throw ParseError("a tail call cannot carry a type annotation", p.span);
    return desugar_call(p.head, p.args, p.a, true, nullptr, names_, p.span);
  }

  static void require_bound(Channel c, Span sp, const std::set<Channel>& scope) {
    if (!scope.count(c)) throw ParseError("unbound channel '" + c.str() + "'", sp);
  }

  template <typename F>
  TermPtr with_bound(Channel c, std::set<Channel>& scope, F f) {
    bool added = scope.insert(c).second;
    TermPtr r = f();
    if (added) scope.erase(c);
    return r;
  }

  const std::map<std::string, size_t>& arities_;
  NameSupply& names_;
};

}  // namespace

TermPtr desugar_call(const std::string& callee, const std::vector<Channel>& args, Channel target,
                     bool tail, TermPtr cont, NameSupply& names, Span sp) {
  Channel spawned = names.fresh();
  TermPtr body = tail ? tm::fwd(target, spawned, sp) : subst_channel(cont, spawned, target);
  for (auto it = args.rbegin(); it != args.rend(); ++it) {
    Channel wrapper = names.fresh();
    body = tm::send_fresh(spawned, wrapper, tm::fwd(wrapper, *it, sp), body, sp);
  }
  return tm::spawn(spawned, nullptr, tm::call(callee, sp), body, sp);
}

Signature parse_signature(std::string_view text) {
  NameSupply names;
  Parser parser(lex(text, names));

  std::vector<SurfaceDecl> decls;
  std::map<std::string, size_t> arities;
  std::set<std::string> defined;

  while (!parser.at(Tok::Eof)) {
    if (parser.at(Tok::KwType)) {
      Span sp = parser.take().span;
      SurfaceDecl d;
      d.is_type = true;
      d.span = sp;
      d.name = parser.ident();
      parser.expect(Tok::Eq);
      d.type = parser.parse_type_expr();
      if (!defined.insert(d.name).second)
        throw ParseError("duplicate definition of '" + d.name + "'", sp);
      decls.push_back(std::move(d));
      continue;
    }
    if (parser.at(Tok::KwProc)) {
      Span sp = parser.take().span;
      SurfaceDecl d;
      d.is_type = false;
      d.span = sp;
      d.name = parser.ident();
      parser.expect(Tok::Colon);
      d.type = parser.parse_type_expr();
      auto [offer, osp] = parser.channel();
      d.offer = offer;
      parser.expect(Tok::LArrow);
      Span hsp = parser.peek().span;
      std::string header = parser.ident();
      if (header != d.name)
        throw ParseError("definition header names '" + header + "' but the declaration is for '" +
                             d.name + "'",
                         hsp);
      while (parser.at_channel()) {
        auto [param, psp] = parser.channel();
        if (param == d.offer || std::count(d.params.begin(), d.params.end(), param))
          throw ParseError("parameter '" + param.str() + "' repeats a bound channel", psp);
        d.params.push_back(param);
      }
      parser.expect(Tok::Eq);
      d.body = parser.parse_process();
      if (!defined.insert(d.name).second)
        throw ParseError("duplicate definition of '" + d.name + "'", sp);
      arities[d.name] = d.params.size();
      decls.push_back(std::move(d));
      continue;
    }
    throw ParseError(std::string("expected 'type' or 'proc', found ") +
                         tok_name(parser.peek().kind),
                     parser.peek().span);
  }

  Signature sig;
  Desugarer desugarer(arities, names);
  for (auto& d : decls) {
    if (d.is_type) {
      sig.add_type({d.name, d.type, d.span});
      continue;
    }
    std::set<Channel> scope{d.offer};
    scope.insert(d.params.begin(), d.params.end());
    TermPtr body = desugarer.run(*d.body, scope);
    for (auto it = d.params.rbegin(); it != d.params.rend(); ++it)
      body = tm::recv(*it, d.offer, body, d.span);
    sig.add_proc({d.name, d.offer, d.type, body, d.params.size(), d.span});
  }
  return sig;
}

TypePtr parse_type(std::string_view text) {
  NameSupply names;
  Parser parser(lex(text, names));
  TypePtr t = parser.parse_type_expr();
  parser.expect(Tok::Eof);
  return t;
}

}  // namespace sill
