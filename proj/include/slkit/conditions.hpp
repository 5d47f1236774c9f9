// Decision procedures for the syntactic side conditions on inductive rule
// systems: progress, connectivity, establishment, alloc-compatibility and
// P-constrainedness.
#ifndef SLKIT_CONDITIONS_HPP
#define SLKIT_CONDITIONS_HPP

#include <map>
#include <set>
#include <string>
#include <vector>

#include "slkit/core.hpp"

namespace slkit {

struct Violation {
  std::string ruleId;   // "<head>/<rule index>" or "<sequent>" for formulas
  std::string reason;
  std::string offending;  // printed sub-formula (may be empty)
};

struct ConditionReport {
  bool ok = true;
  std::vector<Violation> violations;

  void add(std::string ruleId, std::string reason, std::string offending) {
    ok = false;
    violations.push_back(
        {std::move(ruleId), std::move(reason), std::move(offending)});
  }
};

// Rule body decomposed as EX-prefix over a separating conjunction of atoms.
// `wellShaped` is false when the body nests quantifiers or disjunctions.
struct BodyShape {
  std::vector<Var> existentials;
  std::vector<Formula> atoms;  // PointsTo / PredAtom / TheoryAtom / Emp
  bool wellShaped = true;
};

BodyShape decomposeBody(const Formula& body);

std::string ruleId(const SID& sid, size_t index);

// Every rule body is a symbolic heap with exactly one points-to atom whose
// source is the rule's first parameter.
ConditionReport checkProgress(const SID& sid);

// Every predicate atom in a body has its first argument among the targets
// of the body's points-to atom. Assumes progress.
ConditionReport checkConnectivity(const SID& sid);

// Least-fixpoint analysis: every existential variable of every rule is,
// modulo the body's equations, either the points-to source or at an
// established argument position of a body atom. Assumes progress and
// connectivity.
ConditionReport checkEstablishment(const SID& sid);

// Argument positions established in every unfolding, per predicate
// (the fixpoint underlying checkEstablishment).
std::map<PredId, std::set<int>> establishedPositions(const SID& sid);

// Positions (1-based) allocated by each predicate.
using AllocMap = std::map<PredId, std::set<int>>;

struct AllocMapResult {
  bool compatible = false;
  AllocMap alloc;       // meaningful when compatible
  PredId witness;       // a predicate whose rules disagree, otherwise empty
};

// The unique alloc map making the SID alloc-compatible, when one exists.
AllocMapResult computeAllocMap(const SID& sid);

// Re-checks that `alloc` makes every rule alloc-compatible.
bool verifyAllocMap(const SID& sid, const AllocMap& alloc);

// alloc(f) for a disjunction-free formula: free variables that occur as a
// points-to source or at an allocated argument position.
std::set<Var> allocatedVars(const Formula& f, const AllocMap& alloc);

// Every theory predicate reachable by unfolding any formula of the sequent
// lies in P.
ConditionReport checkConstrained(const Sequent& sq,
                                 const std::set<TheorySym>& P);

// Theory symbols reachable from the sequent's formulas through the SID.
std::set<TheorySym> reachableTheorySyms(const Sequent& sq);

}  // namespace slkit

#endif  // SLKIT_CONDITIONS_HPP
