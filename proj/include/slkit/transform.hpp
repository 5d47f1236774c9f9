// Equality/disequality elimination for established sequents: predicate
// splitting for alloc-compatibility, plus the four-step rewrite pipeline.
#ifndef SLKIT_TRANSFORM_HPP
#define SLKIT_TRANSFORM_HPP

#include <set>
#include <string>
#include <utility>
#include <vector>

#include "slkit/conditions.hpp"
#include "slkit/core.hpp"

namespace slkit {

struct NotPcSIDTransformError : Error {
  using Error::Error;
};
struct NotEstablishedError : Error {
  using Error::Error;
};
struct MissingAllocMapError : Error {
  using Error::Error;
};

// Deterministic flat names for derived predicates. Distinct tags yield
// distinct names; '%' keeps them out of the user namespace.
PredId extendedName(const PredId& base);
PredId allocVariantName(const PredId& base, const std::set<int>& positions);
PredId mergeVariantName(const PredId& base, const std::vector<int>& pattern);

struct PipelineTrace {
  struct Snapshot {
    std::string label;
    Sequent sequent;
    uint64_t width = 0;
    uint64_t size = 0;
  };
  std::vector<Snapshot> snapshots;
};

// Splits every predicate into alloc-tagged variants,
// keeps the alloc-compatible rules, and replaces each predicate atom by the
// disjunction of its productive variants. Output is equivalent to the input
// (both valid or both not).
Sequent makeAllocCompatible(const Sequent& sq);

// Step 1: formulas become disjunctions of symbolic heaps and the sequent's
// free-variable vector is appended to every predicate, threaded through all
// recursive calls.
Sequent step1SymbolicHeapsAndParams(const Sequent& sq);

// Step 2: eliminates equations on existentials by instantiation, then case
// splits every symbolic heap over the idempotent substitutions that merge
// existentials into representatives, saturating the survivors with
// disequations.
Sequent step2InstantiateExistentials(const Sequent& sq);

// Step 3: collapses atoms with repeated arguments into merged predicates,
// then removes all equations (trivial ones become emp, the rest kill their
// rule or disjunct).
Sequent step3CollapseRepeatedArgs(const Sequent& sq);

// Step 4: extends kappa with a sink parameter, allocates every referred-to
// free variable, and erases the remaining disequations.
Sequent step4AllocateFreeVars(const Sequent& sq);

// Full pipeline: Step1; Step2; Step3; makeAllocCompatible; Step4.
std::pair<Sequent, PipelineTrace> eliminateEqualities(const Sequent& sq);

// Drops rules of predicates unreachable from the sequent's formulas.
Sequent pruneUnreachable(const Sequent& sq);

}  // namespace slkit

#endif  // SLKIT_TRANSFORM_HPP
