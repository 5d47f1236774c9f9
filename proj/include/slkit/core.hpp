// Abstract syntax, metrics, substitution and normal forms for separation
// logic formulas and inductive rule systems.
#ifndef SLKIT_CORE_HPP
#define SLKIT_CORE_HPP

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace slkit {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CaptureError : Error {
  using Error::Error;
};
struct UnknownPredicateError : Error {
  using Error::Error;
};

// Variables are interned by name; two Vars are equal iff their names are.
// Names produced by fresh-name generators contain '%', which the input
// grammar reserves, so generated names never collide with user names.
class Var {
public:
  Var() = default;
  explicit Var(std::string name) : name_(std::move(name)) {}
  const std::string& name() const { return name_; }
  bool operator==(const Var& o) const { return name_ == o.name_; }
  bool operator!=(const Var& o) const { return name_ != o.name_; }
  bool operator<(const Var& o) const { return name_ < o.name_; }

private:
  std::string name_;
};

using PredId = std::string;

// Built-in theory predicate symbols. Eq/Neq/False exist in every theory;
// S/Sbar are the generic pair bound by the selected theory; Leq/Geq/Succ are
// the concrete names.
enum class TheorySym : uint8_t { Eq, Neq, False, S, Sbar, Leq, Geq, Succ };

const char* theorySymName(TheorySym s);
std::optional<TheorySym> theorySymFromName(const std::string& name);
int theorySymArity(TheorySym s);
// Weight used by size(): Eq/Neq/False count as single symbols, the named
// relations count their identifier length.
int theorySymWeight(TheorySym s);

struct PointsTo {
  Var source;
  std::vector<Var> targets;  // length = kappa of the enclosing SID
  bool operator==(const PointsTo& o) const {
    return source == o.source && targets == o.targets;
  }
};

struct PredAtom {
  PredId pred;
  std::vector<Var> args;
  bool operator==(const PredAtom& o) const {
    return pred == o.pred && args == o.args;
  }
};

struct TheoryAtom {
  TheorySym sym;
  std::vector<Var> args;
  bool operator==(const TheoryAtom& o) const {
    return sym == o.sym && args == o.args;
  }
};

// Immutable formula tree with shared substructure. Copies are cheap.
class Formula {
public:
  enum class Kind : uint8_t { Emp, PointsTo, PredAtom, TheoryAtom, Star, Or, Exists };

  Formula() : Formula(emp()) {}

  static Formula emp();
  static Formula pointsTo(Var source, std::vector<Var> targets);
  static Formula predAtom(PredId pred, std::vector<Var> args);
  static Formula theoryAtom(TheorySym sym, std::vector<Var> args);
  static Formula star(Formula lhs, Formula rhs);
  static Formula disj(Formula lhs, Formula rhs);
  static Formula exists(Var bound, Formula body);
  // Right fold: star over a non-empty list, or emp.
  static Formula starAll(const std::vector<Formula>& conjuncts);
  // Disjunction over a non-empty list; `false` atom if empty.
  static Formula disjAll(const std::vector<Formula>& disjuncts);
  static Formula existsAll(const std::vector<Var>& bound, Formula body);

  Kind kind() const;
  const PointsTo& pointsTo() const;
  const PredAtom& predAtom() const;
  const TheoryAtom& theoryAtom() const;
  const Formula& left() const;   // Star/Or
  const Formula& right() const;  // Star/Or
  const Var& bound() const;      // Exists
  const Formula& body() const;   // Exists

  bool isAtom() const;
  bool operator==(const Formula& o) const;
  bool operator!=(const Formula& o) const { return !(*this == o); }

private:
  struct Node;
  explicit Formula(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

// A substitution maps variables to variables; dom is the set of variables it
// moves.
class Substitution {
public:
  Substitution() = default;
  static Substitution single(const Var& from, const Var& to);
  void set(const Var& from, const Var& to);
  const Var& apply(const Var& v) const;
  std::vector<Var> apply(const std::vector<Var>& vs) const;
  std::set<Var> domain() const;
  std::set<Var> image() const;
  bool empty() const { return map_.empty(); }

private:
  std::map<Var, Var> map_;
};

struct Rule {
  PredId head;
  std::vector<Var> params;  // pairwise distinct
  Formula body;
};

struct SID {
  int kappa = 1;
  std::vector<Rule> rules;
  std::map<PredId, int> arities;

  void declare(const PredId& pred, int arity);
  int arity(const PredId& pred) const;  // throws UnknownPredicateError
  bool declared(const PredId& pred) const;
  std::vector<const Rule*> rulesFor(const PredId& pred) const;
};

enum class TheoryId : uint8_t { Equality, NatSucc, NatLeq };

const char* theoryName(TheoryId t);
std::optional<TheoryId> theoryFromName(const std::string& name);
// True if the theory interprets the symbol at all.
bool theoryAllows(TheoryId t, TheorySym s);

struct Sequent {
  Formula lhs;
  std::vector<Formula> rhs;
  SID sid;
  TheoryId theory = TheoryId::Equality;
};

// Deterministic fresh-name generation: base + "%" + counter. One source per
// transformation session; '%' never occurs in parsed input.
class FreshNames {
public:
  FreshNames() = default;
  Var fresh(const std::string& base);
  // Fast-forward the counter past any %N suffix already present in `name`,
  // so freshly generated names cannot collide with earlier generations.
  void avoid(const std::string& name);
  void avoidAllIn(const Formula& f);

private:
  uint64_t next_ = 1;
};

// --- metrics -------------------------------------------------------------

// Occurrence count where identifiers weigh their name length and each
// logical symbol (emp, |->, *, \/, EX) weighs 1; parentheses and commas
// weigh 0.
uint64_t size(const Formula& f);
uint64_t size(const Rule& r);
uint64_t size(const SID& sid);
uint64_t size(const Sequent& sq);

uint64_t width(const Formula& f);
uint64_t width(const SID& sid);
uint64_t width(const Sequent& sq);

// --- variable bookkeeping ------------------------------------------------

std::set<Var> freeVars(const Formula& f);
std::set<Var> boundVars(const Formula& f);
std::set<Var> allVars(const Formula& f);
// Free variables of lhs and every rhs member.
std::set<Var> freeVars(const Sequent& sq);

// --- operations ----------------------------------------------------------

// Replaces free occurrences; bound occurrences are untouched. When a bound
// variable would capture an incoming variable it is renamed via `fresh`
// (pass nullptr to get a CaptureError instead).
Formula applySubst(const Formula& f, const Substitution& sigma,
                   FreshNames* fresh);

// Renames binders so all bound variables are pairwise distinct and distinct
// from every free variable.
Formula normalizeBinders(const Formula& f, FreshNames& fresh);

// Hoists quantifiers using (EX x. f) o g == EX x. (f o g) for o in {*, \/}.
// Binders are freshened whenever hoisting would clash.
Formula prenex(const Formula& f);

// Splits into symbolic heaps (prenex, disjunction-free) whose disjunction is
// model-equivalent to the input. `false` disjuncts are dropped when other
// disjuncts remain.
std::vector<Formula> dnfSymbolicHeaps(const Formula& f);

// All one-step unfoldings: each predicate atom occurrence replaced by each
// rule body (parameters substituted, rule existentials freshened on clash).
// Atom order is leftmost-first, rules in SID order.
std::vector<Formula> unfoldOnce(const Formula& f, const SID& sid);

// Reflexive-transitive closure of "some rule of p mentions q in its body".
std::map<PredId, std::set<PredId>> dependsOn(const SID& sid);

// Predicates appearing in the formula.
std::set<PredId> predsIn(const Formula& f);
// Theory symbols appearing in the formula.
std::set<TheorySym> theorySymsIn(const Formula& f);

}  // namespace slkit

#endif  // SLKIT_CORE_HPP
