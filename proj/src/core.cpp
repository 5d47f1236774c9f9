#include "slkit/core.hpp"

#include <algorithm>
#include <cassert>
#include <charconv>
#include <functional>

namespace slkit {

// --- theory symbols --------------------------------------------------------

const char* theorySymName(TheorySym s) {
  switch (s) {
    case TheorySym::Eq: return "=";
    case TheorySym::Neq: return "!=";
    case TheorySym::False: return "false";
    case TheorySym::S: return "S";
    case TheorySym::Sbar: return "Sbar";
    case TheorySym::Leq: return "leq";
    case TheorySym::Geq: return "geq";
    case TheorySym::Succ: return "succ";
  }
  return "?";
}

std::optional<TheorySym> theorySymFromName(const std::string& name) {
  if (name == "S") return TheorySym::S;
  if (name == "Sbar") return TheorySym::Sbar;
  if (name == "leq") return TheorySym::Leq;
  if (name == "geq") return TheorySym::Geq;
  if (name == "succ") return TheorySym::Succ;
  if (name == "false") return TheorySym::False;
  return std::nullopt;
}

int theorySymArity(TheorySym s) {
  return s == TheorySym::False ? 0 : 2;
}

int theorySymWeight(TheorySym s) {
  switch (s) {
    case TheorySym::Eq:
    case TheorySym::Neq:
    case TheorySym::False:
      return 1;
    default:
      return static_cast<int>(std::string(theorySymName(s)).size());
  }
}

const char* theoryName(TheoryId t) {
  switch (t) {
    case TheoryId::Equality: return "equality";
    case TheoryId::NatSucc: return "nat_succ";
    case TheoryId::NatLeq: return "nat_leq";
  }
  return "?";
}

std::optional<TheoryId> theoryFromName(const std::string& name) {
  if (name == "equality") return TheoryId::Equality;
  if (name == "nat_succ") return TheoryId::NatSucc;
  if (name == "nat_leq") return TheoryId::NatLeq;
  return std::nullopt;
}

bool theoryAllows(TheoryId t, TheorySym s) {
  switch (s) {
    case TheorySym::Eq:
    case TheorySym::Neq:
    case TheorySym::False:
      return true;
    case TheorySym::S:
    case TheorySym::Sbar:
      return t != TheoryId::Equality;
    case TheorySym::Succ:
      return t == TheoryId::NatSucc;
    case TheorySym::Leq:
    case TheorySym::Geq:
      return t == TheoryId::NatLeq;
  }
  return false;
}

// --- formula nodes ----------------------------------------------------------

struct Formula::Node {
  Kind kind;
  // Atom payloads (only one is meaningful, selected by kind).
  PointsTo pts;
  PredAtom pred;
  TheoryAtom theo;
  // Children for Star/Or; children[0] doubles as the Exists body.
  std::vector<Formula> children;
  Var boundVar;
};

Formula Formula::emp() {
  static const std::shared_ptr<const Node> node = [] {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Emp;
    return n;
  }();
  return Formula(node);
}

Formula Formula::pointsTo(Var source, std::vector<Var> targets) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::PointsTo;
  n->pts = PointsTo{std::move(source), std::move(targets)};
  return Formula(std::move(n));
}

Formula Formula::predAtom(PredId pred, std::vector<Var> args) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::PredAtom;
  n->pred = PredAtom{std::move(pred), std::move(args)};
  return Formula(std::move(n));
}

Formula Formula::theoryAtom(TheorySym sym, std::vector<Var> args) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::TheoryAtom;
  n->theo = TheoryAtom{sym, std::move(args)};
  return Formula(std::move(n));
}

Formula Formula::star(Formula lhs, Formula rhs) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Star;
  n->children = {std::move(lhs), std::move(rhs)};
  return Formula(std::move(n));
}

Formula Formula::disj(Formula lhs, Formula rhs) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Or;
  n->children = {std::move(lhs), std::move(rhs)};
  return Formula(std::move(n));
}

Formula Formula::exists(Var bound, Formula body) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Exists;
  n->boundVar = std::move(bound);
  n->children = {std::move(body)};
  return Formula(std::move(n));
}

Formula Formula::starAll(const std::vector<Formula>& conjuncts) {
  if (conjuncts.empty()) return emp();
  Formula acc = conjuncts.front();
  for (size_t i = 1; i < conjuncts.size(); ++i) acc = star(acc, conjuncts[i]);
  return acc;
}

Formula Formula::disjAll(const std::vector<Formula>& disjuncts) {
  if (disjuncts.empty()) return theoryAtom(TheorySym::False, {});
  Formula acc = disjuncts.front();
  for (size_t i = 1; i < disjuncts.size(); ++i) acc = disj(acc, disjuncts[i]);
  return acc;
}

Formula Formula::existsAll(const std::vector<Var>& bound, Formula body) {
  Formula acc = std::move(body);
  for (auto it = bound.rbegin(); it != bound.rend(); ++it)
    acc = exists(*it, acc);
  return acc;
}

Formula::Kind Formula::kind() const { return node_->kind; }
const PointsTo& Formula::pointsTo() const { return node_->pts; }
const PredAtom& Formula::predAtom() const { return node_->pred; }
const TheoryAtom& Formula::theoryAtom() const { return node_->theo; }

const Formula& Formula::left() const { return node_->children[0]; }
const Formula& Formula::right() const { return node_->children[1]; }
const Var& Formula::bound() const { return node_->boundVar; }
const Formula& Formula::body() const { return node_->children[0]; }

bool Formula::isAtom() const {
  switch (kind()) {
    case Kind::PointsTo:
    case Kind::PredAtom:
    case Kind::TheoryAtom:
      return true;
    default:
      return false;
  }
}

bool Formula::operator==(const Formula& o) const {
  if (node_ == o.node_) return true;
  if (kind() != o.kind()) return false;
  switch (kind()) {
    case Kind::Emp: return true;
    case Kind::PointsTo: return pointsTo() == o.pointsTo();
    case Kind::PredAtom: return predAtom() == o.predAtom();
    case Kind::TheoryAtom: return theoryAtom() == o.theoryAtom();
    case Kind::Star:
    case Kind::Or:
      return left() == o.left() && right() == o.right();
    case Kind::Exists:
      return bound() == o.bound() && body() == o.body();
  }
  return false;
}

// --- substitution -----------------------------------------------------------

Substitution Substitution::single(const Var& from, const Var& to) {
  Substitution s;
  s.set(from, to);
  return s;
}

void Substitution::set(const Var& from, const Var& to) {
  if (from == to)
    map_.erase(from);
  else
    map_[from] = to;
}

const Var& Substitution::apply(const Var& v) const {
  auto it = map_.find(v);
  return it == map_.end() ? v : it->second;
}

std::vector<Var> Substitution::apply(const std::vector<Var>& vs) const {
  std::vector<Var> out;
  out.reserve(vs.size());
  for (const auto& v : vs) out.push_back(apply(v));
  return out;
}

std::set<Var> Substitution::domain() const {
  std::set<Var> d;
  for (const auto& [k, v] : map_) d.insert(k);
  return d;
}

std::set<Var> Substitution::image() const {
  std::set<Var> im;
  for (const auto& [k, v] : map_) im.insert(v);
  return im;
}

// --- SID ---------------------------------------------------------------------

void SID::declare(const PredId& pred, int ar) {
  auto it = arities.find(pred);
  if (it != arities.end() && it->second != ar)
    throw Error("conflicting arity for predicate '" + pred + "'");
  arities[pred] = ar;
}

int SID::arity(const PredId& pred) const {
  auto it = arities.find(pred);
  if (it == arities.end())
    throw UnknownPredicateError("unknown predicate '" + pred + "'");
  return it->second;
}

bool SID::declared(const PredId& pred) const {
  return arities.count(pred) != 0;
}

std::vector<const Rule*> SID::rulesFor(const PredId& pred) const {
  std::vector<const Rule*> out;
  for (const auto& r : rules)
    if (r.head == pred) out.push_back(&r);
  return out;
}

// --- fresh names --------------------------------------------------------------

Var FreshNames::fresh(const std::string& base) {
  std::string stem = base.substr(0, base.find('%'));
  if (stem.empty()) stem = "v";
  return Var(stem + "%" + std::to_string(next_++));
}

void FreshNames::avoid(const std::string& name) {
  auto pos = name.rfind('%');
  if (pos == std::string::npos) return;
  uint64_t n = 0;
  const char* b = name.data() + pos + 1;
  const char* e = name.data() + name.size();
  auto [p, ec] = std::from_chars(b, e, n);
  if (ec == std::errc() && p == e && n >= next_) next_ = n + 1;
}

void FreshNames::avoidAllIn(const Formula& f) {
  for (const auto& v : allVars(f)) avoid(v.name());
}

// --- metrics -------------------------------------------------------------------

namespace {

uint64_t atomSize(const Formula& f) {
  switch (f.kind()) {
    case Formula::Kind::Emp:
      return 1;
    case Formula::Kind::PointsTo: {
      const auto& a = f.pointsTo();
      uint64_t s = a.source.name().size() + 1;  // |-> weighs 1
      for (const auto& t : a.targets) s += t.name().size();
      return s;
    }
    case Formula::Kind::PredAtom: {
      const auto& a = f.predAtom();
      uint64_t s = a.pred.size();
      for (const auto& t : a.args) s += t.name().size();
      return s;
    }
    case Formula::Kind::TheoryAtom: {
      const auto& a = f.theoryAtom();
      uint64_t s = theorySymWeight(a.sym);
      for (const auto& t : a.args) s += t.name().size();
      return s;
    }
    default:
      assert(false);
      return 0;
  }
}

}  // namespace

uint64_t size(const Formula& f) {
  switch (f.kind()) {
    case Formula::Kind::Star:
    case Formula::Kind::Or:
      return size(f.left()) + size(f.right()) + 1;
    case Formula::Kind::Exists:
      return size(f.body()) + 1 + f.bound().name().size();
    default:
      return atomSize(f);
  }
}

uint64_t size(const Rule& r) {
  uint64_t head = r.head.size();
  for (const auto& p : r.params) head += p.name().size();
  return head + size(r.body);
}

uint64_t size(const SID& sid) {
  uint64_t s = 0;
  for (const auto& r : sid.rules) s += size(r);
  return s;
}

uint64_t size(const Sequent& sq) {
  uint64_t s = size(sq.lhs) + size(sq.sid);
  for (const auto& f : sq.rhs) s += size(f);
  return s;
}

uint64_t width(const Formula& f) {
  switch (f.kind()) {
    case Formula::Kind::Or:
      return std::max(width(f.left()), width(f.right()));
    case Formula::Kind::Star:
      return width(f.left()) + width(f.right()) + 1;
    case Formula::Kind::Exists:
      return width(f.body()) + 1 + f.bound().name().size();
    default:
      return atomSize(f);
  }
}

uint64_t width(const SID& sid) {
  uint64_t w = 0;
  for (const auto& r : sid.rules) w = std::max(w, size(r));
  return w;
}

uint64_t width(const Sequent& sq) {
  uint64_t w = std::max(width(sq.lhs), width(sq.sid));
  for (const auto& f : sq.rhs) w = std::max(w, width(f));
  w = std::max(w, static_cast<uint64_t>(freeVars(sq).size()));
  return w;
}

// --- variable bookkeeping ---------------------------------------------------------

namespace {

void collectVars(const Formula& f, std::set<Var>& bound, std::set<Var>* free,
                 std::set<Var>* all, std::vector<Var> scope) {
  switch (f.kind()) {
    case Formula::Kind::Emp:
      return;
    case Formula::Kind::PointsTo: {
      const auto& a = f.pointsTo();
      auto note = [&](const Var& v) {
        if (all) all->insert(v);
        if (free && std::find(scope.begin(), scope.end(), v) == scope.end())
          free->insert(v);
      };
      note(a.source);
      for (const auto& t : a.targets) note(t);
      return;
    }
    case Formula::Kind::PredAtom:
    case Formula::Kind::TheoryAtom: {
      const auto& args = f.kind() == Formula::Kind::PredAtom
                             ? f.predAtom().args
                             : f.theoryAtom().args;
      for (const auto& v : args) {
        if (all) all->insert(v);
        if (free && std::find(scope.begin(), scope.end(), v) == scope.end())
          free->insert(v);
      }
      return;
    }
    case Formula::Kind::Star:
    case Formula::Kind::Or:
      collectVars(f.left(), bound, free, all, scope);
      collectVars(f.right(), bound, free, all, scope);
      return;
    case Formula::Kind::Exists:
      bound.insert(f.bound());
      if (all) all->insert(f.bound());
      scope.push_back(f.bound());
      collectVars(f.body(), bound, free, all, scope);
      return;
  }
}

}  // namespace

std::set<Var> freeVars(const Formula& f) {
  std::set<Var> bound, free;
  collectVars(f, bound, &free, nullptr, {});
  return free;
}

std::set<Var> boundVars(const Formula& f) {
  std::set<Var> bound;
  collectVars(f, bound, nullptr, nullptr, {});
  return bound;
}

std::set<Var> allVars(const Formula& f) {
  std::set<Var> bound, all;
  collectVars(f, bound, nullptr, &all, {});
  return all;
}

std::set<Var> freeVars(const Sequent& sq) {
  std::set<Var> fv = freeVars(sq.lhs);
  for (const auto& f : sq.rhs) {
    auto more = freeVars(f);
    fv.insert(more.begin(), more.end());
  }
  return fv;
}

// --- substitution application -------------------------------------------------------

namespace {

Formula substRec(const Formula& f, const Substitution& sigma,
                 FreshNames* fresh) {
  switch (f.kind()) {
    case Formula::Kind::Emp:
      return f;
    case Formula::Kind::PointsTo: {
      const auto& a = f.pointsTo();
      return Formula::pointsTo(sigma.apply(a.source), sigma.apply(a.targets));
    }
    case Formula::Kind::PredAtom: {
      const auto& a = f.predAtom();
      return Formula::predAtom(a.pred, sigma.apply(a.args));
    }
    case Formula::Kind::TheoryAtom: {
      const auto& a = f.theoryAtom();
      return Formula::theoryAtom(a.sym, sigma.apply(a.args));
    }
    case Formula::Kind::Star:
      return Formula::star(substRec(f.left(), sigma, fresh),
                           substRec(f.right(), sigma, fresh));
    case Formula::Kind::Or:
      return Formula::disj(substRec(f.left(), sigma, fresh),
                           substRec(f.right(), sigma, fresh));
    case Formula::Kind::Exists: {
      const Var& b = f.bound();
      // The binder shadows b: restrict sigma.
      Substitution inner = sigma;
      inner.set(b, b);
      // Capture check: does any moved free variable of the body map onto b?
      bool captures = false;
      auto bodyFree = freeVars(f.body());
      for (const auto& v : bodyFree) {
        if (v != b && inner.apply(v) == b) {
          captures = true;
          break;
        }
      }
      if (!captures) return Formula::exists(b, substRec(f.body(), inner, fresh));
      if (!fresh)
        throw CaptureError("substitution would capture bound variable '" +
                           b.name() + "'");
      Var nb = fresh->fresh(b.name());
      Substitution rename = Substitution::single(b, nb);
      Formula renamedBody = substRec(f.body(), rename, fresh);
      return Formula::exists(nb, substRec(renamedBody, inner, fresh));
    }
  }
  return f;
}

}  // namespace

Formula applySubst(const Formula& f, const Substitution& sigma,
                   FreshNames* fresh) {
  if (sigma.empty()) return f;
  return substRec(f, sigma, fresh);
}

Formula normalizeBinders(const Formula& f, FreshNames& fresh) {
  std::set<Var> taken = freeVars(f);
  // Rebuild, renaming any binder whose name was already seen.
  struct Rec {
    std::set<Var>& taken;
    FreshNames& fresh;
    Formula run(const Formula& g, const Substitution& sigma) {
      switch (g.kind()) {
        case Formula::Kind::Emp:
          return g;
        case Formula::Kind::PointsTo: {
          const auto& a = g.pointsTo();
          return Formula::pointsTo(sigma.apply(a.source),
                                   sigma.apply(a.targets));
        }
        case Formula::Kind::PredAtom: {
          const auto& a = g.predAtom();
          return Formula::predAtom(a.pred, sigma.apply(a.args));
        }
        case Formula::Kind::TheoryAtom: {
          const auto& a = g.theoryAtom();
          return Formula::theoryAtom(a.sym, sigma.apply(a.args));
        }
        case Formula::Kind::Star:
          return Formula::star(run(g.left(), sigma), run(g.right(), sigma));
        case Formula::Kind::Or:
          return Formula::disj(run(g.left(), sigma), run(g.right(), sigma));
        case Formula::Kind::Exists: {
          Var b = g.bound();
          Substitution inner = sigma;
          if (taken.count(b)) {
            Var nb = fresh.fresh(b.name());
            inner.set(b, nb);
            b = nb;
          } else {
            inner.set(g.bound(), g.bound());
          }
          taken.insert(b);
          return Formula::exists(b, run(g.body(), inner));
        }
      }
      return g;
    }
  } rec{taken, fresh};
  return rec.run(f, Substitution());
}

// --- prenex / dnf ----------------------------------------------------------------------

namespace {

struct PrenexResult {
  std::vector<Var> binders;
  Formula matrix;
};

// Hoists binders; renames a binder when its name is already in `taken`.
PrenexResult prenexRec(const Formula& f, std::set<Var>& taken,
                       FreshNames& fresh) {
  switch (f.kind()) {
    case Formula::Kind::Star:
    case Formula::Kind::Or: {
      PrenexResult l = prenexRec(f.left(), taken, fresh);
      PrenexResult r = prenexRec(f.right(), taken, fresh);
      PrenexResult out;
      out.binders = l.binders;
      out.binders.insert(out.binders.end(), r.binders.begin(), r.binders.end());
      out.matrix = f.kind() == Formula::Kind::Star
                       ? Formula::star(l.matrix, r.matrix)
                       : Formula::disj(l.matrix, r.matrix);
      return out;
    }
    case Formula::Kind::Exists: {
      Var b = f.bound();
      Formula body = f.body();
      if (taken.count(b)) {
        Var nb = fresh.fresh(b.name());
        body = applySubst(body, Substitution::single(b, nb), &fresh);
        b = nb;
      }
      taken.insert(b);
      PrenexResult inner = prenexRec(body, taken, fresh);
      PrenexResult out;
      out.binders.push_back(b);
      out.binders.insert(out.binders.end(), inner.binders.begin(),
                         inner.binders.end());
      out.matrix = inner.matrix;
      return out;
    }
    default:
      return PrenexResult{{}, f};
  }
}

}  // namespace

Formula prenex(const Formula& f) {
  FreshNames fresh;
  std::set<Var> taken = freeVars(f);
  for (const auto& v : allVars(f)) fresh.avoid(v.name());
  PrenexResult r = prenexRec(f, taken, fresh);
  return Formula::existsAll(r.binders, r.matrix);
}

std::vector<Formula> dnfSymbolicHeaps(const Formula& f) {
  Formula p = prenex(f);
  std::vector<Var> binders;
  Formula matrix = p;
  while (matrix.kind() == Formula::Kind::Exists) {
    binders.push_back(matrix.bound());
    matrix = matrix.body();
  }
  // Distribute \/ over * in the quantifier-free matrix.
  struct Rec {
    std::vector<Formula> run(const Formula& g) {
      switch (g.kind()) {
        case Formula::Kind::Or: {
          auto l = run(g.left());
          auto r = run(g.right());
          l.insert(l.end(), r.begin(), r.end());
          return l;
        }
        case Formula::Kind::Star: {
          auto l = run(g.left());
          auto r = run(g.right());
          std::vector<Formula> out;
          out.reserve(l.size() * r.size());
          for (const auto& a : l)
            for (const auto& b : r) out.push_back(Formula::star(a, b));
          return out;
        }
        default:
          return {g};
      }
    }
  } rec;
  std::vector<Formula> matrices = rec.run(matrix);
  std::vector<Formula> out;
  for (const auto& m : matrices) {
    // Drop unsatisfiable `false` disjuncts unless nothing else remains.
    if (m.kind() == Formula::Kind::TheoryAtom &&
        m.theoryAtom().sym == TheorySym::False)
      continue;
    // Requantify only the binders actually used by this disjunct.
    auto fv = freeVars(m);
    std::vector<Var> used;
    for (const auto& b : binders)
      if (fv.count(b)) used.push_back(b);
    out.push_back(Formula::existsAll(used, m));
  }
  if (out.empty())
    out.push_back(Formula::theoryAtom(TheorySym::False, {}));
  return out;
}

// --- unfolding ----------------------------------------------------------------------------

namespace {

// Instantiates `rule` for the atom arguments, freshening rule existentials
// that clash with `avoid`.
Formula instantiateRule(const Rule& rule, const std::vector<Var>& args,
                        const std::set<Var>& avoid, FreshNames& fresh) {
  Formula body = rule.body;
  // Rename bound variables clashing with the context or the arguments.
  std::set<Var> taken = avoid;
  for (const auto& a : args) taken.insert(a);
  for (const auto& p : rule.params) taken.insert(p);
  struct Rec {
    std::set<Var>& taken;
    FreshNames& fresh;
    Formula run(const Formula& g, const Substitution& sigma) {
      switch (g.kind()) {
        case Formula::Kind::Emp:
          return g;
        case Formula::Kind::PointsTo: {
          const auto& a = g.pointsTo();
          return Formula::pointsTo(sigma.apply(a.source),
                                   sigma.apply(a.targets));
        }
        case Formula::Kind::PredAtom: {
          const auto& a = g.predAtom();
          return Formula::predAtom(a.pred, sigma.apply(a.args));
        }
        case Formula::Kind::TheoryAtom: {
          const auto& a = g.theoryAtom();
          return Formula::theoryAtom(a.sym, sigma.apply(a.args));
        }
        case Formula::Kind::Star:
          return Formula::star(run(g.left(), sigma), run(g.right(), sigma));
        case Formula::Kind::Or:
          return Formula::disj(run(g.left(), sigma), run(g.right(), sigma));
        case Formula::Kind::Exists: {
          Var b = g.bound();
          Substitution inner = sigma;
          if (taken.count(b)) {
            Var nb = fresh.fresh(b.name());
            inner.set(b, nb);
            b = nb;
          } else {
            inner.set(g.bound(), g.bound());
          }
          taken.insert(b);
          return Formula::exists(b, run(g.body(), inner));
        }
      }
      return g;
    }
  } rec{taken, fresh};
  Substitution sigma;
  for (size_t i = 0; i < rule.params.size(); ++i)
    sigma.set(rule.params[i], args[i]);
  return rec.run(body, sigma);
}

}  // namespace

std::vector<Formula> unfoldOnce(const Formula& f, const SID& sid) {
  FreshNames fresh;
  for (const auto& v : allVars(f)) fresh.avoid(v.name());
  for (const auto& r : sid.rules) {
    for (const auto& v : allVars(r.body)) fresh.avoid(v.name());
    for (const auto& p : r.params) fresh.avoid(p.name());
  }
  std::set<Var> avoid = allVars(f);
  std::vector<Formula> out;
  // Walk the tree; at each predicate atom, emit one result per rule with the
  // surrounding context rebuilt around the instantiated body.
  struct Rec {
    const SID& sid;
    const std::set<Var>& avoid;
    FreshNames& fresh;
    std::vector<Formula>& out;
    void run(const Formula& g, const std::function<Formula(Formula)>& wrap) {
      switch (g.kind()) {
        case Formula::Kind::PredAtom: {
          const auto& a = g.predAtom();
          if (!sid.declared(a.pred))
            throw UnknownPredicateError("unknown predicate '" + a.pred + "'");
          for (const Rule* r : sid.rulesFor(a.pred)) {
            FreshNames local = fresh;
            Formula inst = instantiateRule(*r, a.args, avoid, local);
            out.push_back(wrap(inst));
          }
          return;
        }
        case Formula::Kind::Star:
        case Formula::Kind::Or: {
          Formula l = g.left(), r = g.right();
          bool isStar = g.kind() == Formula::Kind::Star;
          run(l, [&, isStar, r](Formula nl) {
            return wrap(isStar ? Formula::star(nl, r) : Formula::disj(nl, r));
          });
          run(r, [&, isStar, l](Formula nr) {
            return wrap(isStar ? Formula::star(l, nr) : Formula::disj(l, nr));
          });
          return;
        }
        case Formula::Kind::Exists: {
          Var b = g.bound();
          run(g.body(),
              [&, b](Formula nb) { return wrap(Formula::exists(b, nb)); });
          return;
        }
        default:
          return;
      }
    }
  } rec{sid, avoid, fresh, out};
  rec.run(f, [](Formula g) { return g; });
  return out;
}

std::map<PredId, std::set<PredId>> dependsOn(const SID& sid) {
  std::map<PredId, std::set<PredId>> rel;
  for (const auto& [p, ar] : sid.arities) rel[p].insert(p);  // reflexive
  for (const auto& r : sid.rules) {
    rel[r.head].insert(r.head);
    for (const auto& q : predsIn(r.body)) rel[r.head].insert(q);
  }
  // Transitive closure (small predicate counts).
  bool changed = true;
  while (changed) {
    changed = false;
    for (auto& [p, qs] : rel) {
      std::set<PredId> add;
      for (const auto& q : qs) {
        auto it = rel.find(q);
        if (it == rel.end()) continue;
        for (const auto& r2 : it->second)
          if (!qs.count(r2)) add.insert(r2);
      }
      if (!add.empty()) {
        qs.insert(add.begin(), add.end());
        changed = true;
      }
    }
  }
  return rel;
}

std::set<PredId> predsIn(const Formula& f) {
  std::set<PredId> out;
  struct Rec {
    std::set<PredId>& out;
    void run(const Formula& g) {
      switch (g.kind()) {
        case Formula::Kind::PredAtom:
          out.insert(g.predAtom().pred);
          return;
        case Formula::Kind::Star:
        case Formula::Kind::Or:
          run(g.left());
          run(g.right());
          return;
        case Formula::Kind::Exists:
          run(g.body());
          return;
        default:
          return;
      }
    }
  } rec{out};
  rec.run(f);
  return out;
}

std::set<TheorySym> theorySymsIn(const Formula& f) {
  std::set<TheorySym> out;
  struct Rec {
    std::set<TheorySym>& out;
    void run(const Formula& g) {
      switch (g.kind()) {
        case Formula::Kind::TheoryAtom:
          out.insert(g.theoryAtom().sym);
          return;
        case Formula::Kind::Star:
        case Formula::Kind::Or:
          run(g.left());
          run(g.right());
          return;
        case Formula::Kind::Exists:
          run(g.body());
          return;
        default:
          return;
      }
    }
  } rec{out};
  rec.run(f);
  return out;
}

}  // namespace slkit
