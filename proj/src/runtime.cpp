#include "sill/runtime.hpp"

#include <algorithm>
#include <random>

#include "sill/typecheck.hpp"

namespace sill {

const char* kind_name(StepEvent::Kind k) {
  switch (k) {
    case StepEvent::Kind::Fwd: return "fwd";
    case StepEvent::Kind::Spawn: return "spawn";
    case StepEvent::Kind::DefUnfold: return "defunfold";
    case StepEvent::Kind::Close: return "close";
    case StepEvent::Kind::SendTensor: return "send-tensor";
    case StepEvent::Kind::Select: return "select";
    case StepEvent::Kind::SendLolli: return "send-lolli";
    case StepEvent::Kind::CaseRecv: return "case-recv";
  }
  return "?";
}

std::string to_string(const StepEvent& ev) {
  std::string out = kind_name(ev.kind);
  out += " " + ev.subject.str();
  if (ev.peer) out += "," + ev.peer->str();
  if (ev.fresh) out += "," + ev.fresh->str();
  if (ev.label) out += " " + *ev.label;
  return out;
}

std::string FidelityViolation::render() const {
  return "fidelity violation on '" + channel.str() + "': event '" + to_string(event) +
         "' matches no alternative in " + before.str();
}

// ---------------------------------------------------------------------------
// Initial-configuration checking

namespace {

std::set<Channel> used_channels(Channel offer, const TermPtr& term) {
  std::set<Channel> uses = free_channels(term);
  uses.erase(offer);
  return uses;
}

}  // namespace

std::vector<Diagnostic> config_check(const Signature& sig,
                                     const std::map<Channel, TermPtr>& procs,
                                     const std::map<Channel, TypePtr>& interface) {
  std::vector<Diagnostic> out;
  std::map<Channel, Channel> user;  // provided channel -> the proc using it
  for (const auto& [c, t] : procs) {
    for (Channel u : used_channels(c, t)) {
      if (!procs.count(u)) {
        out.push_back({"process '" + c.str() + "' uses channel '" + u.str() +
                           "' which no process provides",
                       t->span});
        continue;
      }
      auto [it, inserted] = user.emplace(u, c);
      if (!inserted)
        out.push_back({"channel '" + u.str() + "' is used by both '" + it->second.str() +
                           "' and '" + c.str() + "'",
                       t->span});
    }
  }
  for (const auto& [c, t] : procs)
    if (!interface.count(c))
      out.push_back({"unclaimed channel '" + c.str() + "': no declared type", t->span});
  for (const auto& [c, _] : interface)
    if (!procs.count(c))
      out.push_back({"declared channel '" + c.str() + "' is not provided", Span{}});
  if (!out.empty()) return out;

  // The client relation must be a forest: follow each proc's user upward.
  std::map<Channel, int> color;  // 0 unseen, 1 on path, 2 done
  for (const auto& [c, _] : procs) {
    Channel cur = c;
    std::vector<Channel> path;
    while (true) {
      int& col = color[cur];
      if (col == 2) break;
      if (col == 1) {
        std::string cycle;
        for (Channel p : path) cycle += p.str() + " -> ";
        out.push_back({"cyclic dependency: " + cycle + cur.str(), Span{}});
        break;
      }
      col = 1;
      path.push_back(cur);
      auto it = user.find(cur);
      if (it == user.end()) break;
      cur = it->second;
    }
    for (Channel p : path) color[p] = 2;
  }
  if (!out.empty()) return out;

  for (const auto& [c, t] : procs) {
    if (t->kind == TermKind::Drain) continue;  // universal client, nothing to check
    ChannelContext ctx;
    for (Channel u : used_channels(c, t)) ctx.set(u, TypeMultiset::of(interface.at(u)));
    if (auto err = check(sig, ctx, t, c, TypeMultiset::of(interface.at(c))))
      out.push_back({"process '" + c.str() + "': " + err->render(),
                     err->span.line ? err->span : t->span});
  }
  return out;
}

Configuration make_configuration(std::map<Channel, TermPtr> procs,
                                 const std::map<Channel, TypePtr>& interface) {
  Configuration config;
  config.procs = std::move(procs);
  for (const auto& [c, t] : interface) config.monitor.emplace(c, TypeMultiset::of(t));
  return config;
}

// ---------------------------------------------------------------------------
// Enabled events

namespace {

// The unique process whose head action is a client action on `ch`.
struct ClientHit {
  Channel proc;
  const ProcessTerm* term;
};

std::optional<ClientHit> find_client(const Configuration& config, Channel ch, Channel provider) {
  for (const auto& [c, t] : config.procs) {
    if (c == provider) continue;
    switch (t->kind) {
      case TermKind::Wait:
      case TermKind::SendFresh:
      case TermKind::Recv:
      case TermKind::Select:
      case TermKind::Case:
      case TermKind::Drain:
        if (t->ch == ch) return ClientHit{c, t.get()};
        break;
      default:
        break;
    }
  }
  return std::nullopt;
}

}  // namespace

std::vector<StepEvent> enabled(const Signature& sig, const Configuration& config) {
  std::vector<StepEvent> out;
  for (const auto& [c, t] : config.procs) {
    switch (t->kind) {
      case TermKind::Fwd:
        if (t->ch == c) out.push_back({StepEvent::Kind::Fwd, c, t->aux, {}, {}});
        break;
      case TermKind::Spawn:
        out.push_back({StepEvent::Kind::Spawn, c, {}, {}, {}});
        break;
      case TermKind::Call:
        if (sig.find_proc(t->label))
          out.push_back({StepEvent::Kind::DefUnfold, c, {}, {}, {}});
        break;
      case TermKind::Close: {
        if (t->ch != c) break;
        auto hit = find_client(config, c, c);
        if (!hit) break;
        if (hit->term->kind == TermKind::Wait || hit->term->kind == TermKind::Drain)
          out.push_back({StepEvent::Kind::Close, c, hit->proc, {}, {}});
        break;
      }
      case TermKind::SendFresh: {
        if (t->ch != c) break;  // provider sends a channel along its own channel
        auto hit = find_client(config, c, c);
        if (!hit) break;
        if (hit->term->kind == TermKind::Recv || hit->term->kind == TermKind::Drain)
          out.push_back({StepEvent::Kind::SendTensor, c, hit->proc, {}, {}});
        break;
      }
      case TermKind::Recv: {
        if (t->ch != c) break;  // provider receives along its own channel
        auto hit = find_client(config, c, c);
        if (!hit) break;
        if (hit->term->kind == TermKind::SendFresh)
          out.push_back({StepEvent::Kind::SendLolli, c, hit->proc, {}, {}});
        break;
      }
      case TermKind::Select: {
        if (t->ch != c) break;
        auto hit = find_client(config, c, c);
        if (!hit) break;
        if (hit->term->kind == TermKind::Drain ||
            (hit->term->kind == TermKind::Case &&
             std::any_of(hit->term->arms.begin(), hit->term->arms.end(),
                         [&](const CaseArm& a) { return a.label == t->label; })))
          out.push_back({StepEvent::Kind::Select, c, hit->proc, t->label, {}});
        break;
      }
      case TermKind::Case: {
        if (t->ch != c) break;
        auto hit = find_client(config, c, c);
        if (!hit) break;
        if (hit->term->kind == TermKind::Select &&
            std::any_of(t->arms.begin(), t->arms.end(),
                        [&](const CaseArm& a) { return a.label == hit->term->label; }))
          out.push_back({StepEvent::Kind::CaseRecv, c, hit->proc, hit->term->label, {}});
        break;
      }
      case TermKind::Wait:
      case TermKind::Drain:
        break;  // client actions; the provider side lists the event
    }
  }
  return out;
}

bool poised(const TermPtr& term, Channel offer) {
  switch (term->kind) {
    case TermKind::Close:
    case TermKind::Recv:
    case TermKind::SendFresh:
    case TermKind::Select:
    case TermKind::Case:
      return term->ch == offer;
    case TermKind::Drain:
      return true;  // a drain only ever waits on its provider
    default:
      return false;  // fwd, spawn and calls always step; wait acts on a used channel
  }
}

// ---------------------------------------------------------------------------
// Fidelity monitor

namespace {

// Structural alternatives of a type: meets and joins widen the set, names
// unfold. The result over-approximates the states a provider may be in.
void alternatives_rec(const Signature& sig, const TypePtr& t, std::vector<TypePtr>& out,
                      int depth) {
  if (depth > 10000) throw std::logic_error("non-contractive type in monitor");
  switch (t->kind) {
    case TypeKind::Meet:
    case TypeKind::Join:
      alternatives_rec(sig, t->left, out, depth + 1);
      alternatives_rec(sig, t->right, out, depth + 1);
      break;
    case TypeKind::Name:
      alternatives_rec(sig, unfold(sig, t->name), out, depth + 1);
      break;
    default:
      out.push_back(t);
      break;
  }
}

std::vector<TypePtr> alternatives(const Signature& sig, const TypeMultiset& ms) {
  std::vector<TypePtr> out;
  for (const auto& t : ms.items()) alternatives_rec(sig, t, out, 0);
  return out;
}

}  // namespace

FidelityResult fidelity_update(const Signature& sig, std::map<Channel, TypeMultiset> monitor,
                               const StepEvent& ev) {
  switch (ev.kind) {
    case StepEvent::Kind::Close:
    case StepEvent::Kind::SendTensor:
    case StepEvent::Kind::Select:
    case StepEvent::Kind::SendLolli:
    case StepEvent::Kind::CaseRecv:
      break;
    default:
      return {std::move(monitor), std::nullopt};
  }
  auto it = monitor.find(ev.subject);
  if (it == monitor.end()) return {std::move(monitor), std::nullopt};
  TypeMultiset before = it->second;

  std::vector<TypePtr> conts, payloads;
  bool closed = false;
  for (const TypePtr& alt : alternatives(sig, before)) {
    switch (ev.kind) {
      case StepEvent::Kind::Close:
        if (alt->kind == TypeKind::End) closed = true;
        break;
      case StepEvent::Kind::SendTensor:
        if (alt->kind == TypeKind::Tensor) {
          payloads.push_back(alt->left);
          conts.push_back(alt->right);
        }
        break;
      case StepEvent::Kind::SendLolli:
        if (alt->kind == TypeKind::Lolli) {
          payloads.push_back(alt->left);
          conts.push_back(alt->right);
        }
        break;
      case StepEvent::Kind::Select:
        if (alt->kind == TypeKind::Internal)
          if (const TypeBranch* br = find_branch(*alt, *ev.label)) conts.push_back(br->type);
        break;
      case StepEvent::Kind::CaseRecv:
        if (alt->kind == TypeKind::External)
          if (const TypeBranch* br = find_branch(*alt, *ev.label)) conts.push_back(br->type);
        break;
      default:
        break;
    }
  }
  if (!closed && conts.empty())
    return {std::move(monitor), FidelityViolation{ev.subject, ev, std::move(before)}};
  if (ev.kind == StepEvent::Kind::Close) {
    monitor.erase(it);
  } else {
    it->second = TypeMultiset(std::move(conts));
    if (ev.fresh && !payloads.empty())
      monitor.emplace(*ev.fresh, TypeMultiset(std::move(payloads)));
  }
  return {std::move(monitor), std::nullopt};
}

// ---------------------------------------------------------------------------
// Stepping

namespace {

Channel drain_offer_base() {
  static Channel base = Channel::named("$drain");
  return base;
}

}  // namespace

StepOutcome step(const Signature& sig, const Configuration& config, const StepEvent& ev) {
  Configuration next = config;
  StepEvent done = ev;
  const TermPtr& subject_term = config.procs.at(ev.subject);

  switch (ev.kind) {
    case StepEvent::Kind::Fwd: {
      Channel from = ev.subject, to = subject_term->aux;
      next.procs.erase(from);
      for (auto& [c, t] : next.procs) t = subst_channel(t, to, from);
      auto mon = next.monitor.find(from);
      if (mon != next.monitor.end()) {
        if (!next.monitor.count(to)) next.monitor.emplace(to, mon->second);
        next.monitor.erase(from);
      }
      break;
    }
    case StepEvent::Kind::Spawn: {
      Channel fresh = subject_term->ch.with_gen(static_cast<uint32_t>(next.next_fresh++));
      done.fresh = fresh;
      next.procs[fresh] = subst_channel(subject_term->child, fresh, subject_term->ch);
      next.procs[ev.subject] = subst_channel(subject_term->cont, fresh, subject_term->ch);
      if (subject_term->annotation) {
        next.monitor.emplace(fresh, TypeMultiset::of(subject_term->annotation));
      } else if (subject_term->child->kind == TermKind::Call) {
        if (const ProcDecl* def = sig.find_proc(subject_term->child->label))
          next.monitor.emplace(fresh, TypeMultiset::of(def->declared));
      }
      break;
    }
    case StepEvent::Kind::DefUnfold: {
      const ProcDecl* def = sig.find_proc(subject_term->label);
      if (!def) throw std::logic_error("stepping a call of an undefined process");
      next.procs[ev.subject] = subst_channel(def->body, ev.subject, def->offer);
      break;
    }
    case StepEvent::Kind::Close: {
      const TermPtr& client = config.procs.at(*ev.peer);
      next.procs.erase(ev.subject);
      if (client->kind == TermKind::Drain)
        next.procs.erase(*ev.peer);
      else
        next.procs[*ev.peer] = client->cont;
      break;
    }
    case StepEvent::Kind::SendTensor: {
      const TermPtr& client = config.procs.at(*ev.peer);
      Channel fresh = subject_term->aux.with_gen(static_cast<uint32_t>(next.next_fresh++));
      done.fresh = fresh;
      next.procs[fresh] = subst_channel(subject_term->child, fresh, subject_term->aux);
      next.procs[ev.subject] = subject_term->cont;
      if (client->kind == TermKind::Drain) {
        Channel dr = drain_offer_base().with_gen(static_cast<uint32_t>(next.next_fresh++));
        next.procs[dr] = tm::drain(fresh);
      } else {
        next.procs[*ev.peer] = subst_channel(client->cont, fresh, client->aux);
      }
      break;
    }
    case StepEvent::Kind::Select: {
      const TermPtr& client = config.procs.at(*ev.peer);
      next.procs[ev.subject] = subject_term->cont;
      if (client->kind != TermKind::Drain) {
        const TermPtr* arm = nullptr;
        for (const auto& a : client->arms)
          if (a.label == *ev.label) arm = &a.body;
        next.procs[*ev.peer] = *arm;
      }
      break;
    }
    case StepEvent::Kind::SendLolli: {
      const TermPtr& client = config.procs.at(*ev.peer);
      Channel fresh = client->aux.with_gen(static_cast<uint32_t>(next.next_fresh++));
      done.fresh = fresh;
      next.procs[ev.subject] = subst_channel(subject_term->cont, fresh, subject_term->aux);
      next.procs[fresh] = subst_channel(client->child, fresh, client->aux);
      next.procs[*ev.peer] = client->cont;
      break;
    }
    case StepEvent::Kind::CaseRecv: {
      const TermPtr& client = config.procs.at(*ev.peer);
      const TermPtr* arm = nullptr;
      for (const auto& a : subject_term->arms)
        if (a.label == *ev.label) arm = &a.body;
      next.procs[ev.subject] = *arm;
      next.procs[*ev.peer] = client->cont;
      break;
    }
  }

  FidelityResult fid = fidelity_update(sig, std::move(next.monitor), done);
  next.monitor = std::move(fid.monitor);
  return {std::move(next), std::move(done), std::move(fid.violation)};
}

RunResult run(const Signature& sig, Configuration config, uint64_t seed, uint64_t fuel) {
  std::mt19937_64 rng(seed);
  std::vector<StepEvent> trace;
  for (uint64_t steps = 0;; ++steps) {
    std::vector<StepEvent> events = enabled(sig, config);
    if (events.empty()) {
      bool all_poised = true;
      for (const auto& [c, t] : config.procs)
        if (!poised(t, c)) all_poised = false;
      return {all_poised ? RunStatus::Poised : RunStatus::Deadlock, std::move(trace), std::nullopt,
              std::move(config)};
    }
    if (steps >= fuel)
      return {RunStatus::FuelExhausted, std::move(trace), std::nullopt, std::move(config)};
    size_t pick = events.size() == 1
                      ? 0
                      : std::uniform_int_distribution<size_t>(0, events.size() - 1)(rng);
    StepOutcome outcome = step(sig, config, events[pick]);
    trace.push_back(outcome.event);
    if (outcome.violation)
      return {RunStatus::FidelityViolation, std::move(trace), std::move(outcome.violation),
              std::move(outcome.next)};
    config = std::move(outcome.next);
  }
}

// ---------------------------------------------------------------------------
// Oracle encoders and decoders

TermPtr encode_nat(uint64_t n, Channel offer) {
  TermPtr t = tm::select(offer, "zero", tm::close(offer));
  for (uint64_t i = 0; i < n; ++i) t = tm::select(offer, "succ", std::move(t));
  return t;
}

TermPtr encode_bits(uint64_t n, Channel offer) {
  TermPtr t = tm::select(offer, "eps", tm::close(offer));
  if (n == 0) return t;
  std::vector<bool> bits;  // least significant first
  for (uint64_t v = n; v > 0; v >>= 1) bits.push_back(v & 1);
  for (auto it = bits.rbegin(); it != bits.rend(); ++it)
    t = tm::select(offer, *it ? "one" : "zero", std::move(t));
  return t;
}

std::vector<std::string> observations(const std::vector<StepEvent>& trace, Channel start) {
  std::vector<std::string> out;
  Channel cur = start;
  for (const StepEvent& ev : trace) {
    if (ev.kind == StepEvent::Kind::Fwd && ev.subject == cur) {
      cur = *ev.peer;  // the forwarder's channel dissolves into its target
      continue;
    }
    if (ev.subject != cur) continue;
    switch (ev.kind) {
      case StepEvent::Kind::Select:
      case StepEvent::Kind::CaseRecv:
        out.push_back(*ev.label);
        break;
      case StepEvent::Kind::Close:
        out.push_back("end");
        break;
      case StepEvent::Kind::SendTensor:
        out.push_back("send");
        break;
      case StepEvent::Kind::SendLolli:
        out.push_back("recv");
        break;
      default:
        break;
    }
  }
  return out;
}

std::optional<uint64_t> decode_nat(const std::vector<std::string>& obs) {
  uint64_t n = 0;
  size_t i = 0;
  while (i < obs.size() && obs[i] == "succ") {
    ++n;
    ++i;
  }
  if (i + 2 != obs.size() || obs[i] != "zero" || obs[i + 1] != "end") return std::nullopt;
  return n;
}

std::optional<BitsValue> decode_bits(const std::vector<std::string>& obs) {
  BitsValue out;
  size_t i = 0;
  std::optional<bool> last_bit;
  while (i < obs.size() && (obs[i] == "zero" || obs[i] == "one")) {
    bool bit = obs[i] == "one";
    if (bit) out.value |= uint64_t(1) << i;
    last_bit = bit;
    ++i;
  }
  if (i + 2 != obs.size() || obs[i] != "eps" || obs[i + 1] != "end") return std::nullopt;
  out.standard = !last_bit.has_value() || *last_bit;
  return out;
}

}  // namespace sill
