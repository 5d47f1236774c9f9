// Stores, heaps, theory evaluation, the exact satisfaction relation and
// bounded countermodel search.
#ifndef SLKIT_SEMANTICS_HPP
#define SLKIT_SEMANTICS_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "slkit/core.hpp"

namespace slkit {

using Location = uint64_t;

struct NonPcSIDError : Error {
  using Error::Error;
};
struct BudgetExceededError : Error {
  using Error::Error;
};

// A store (total on its declared universe) plus a finite heap mapping
// locations to kappa-tuples. Immutable by convention after construction.
struct Structure {
  std::map<Var, Location> store;
  std::map<Location, std::vector<Location>> heap;

  bool storeInjective() const;
  size_t heapSize() const { return heap.size(); }
  bool operator==(const Structure& o) const {
    return store == o.store && heap == o.heap;
  }
  bool operator<(const Structure& o) const {
    if (store != o.store) return store < o.store;
    return heap < o.heap;
  }
};

// Evaluates one theory atom on concrete locations. Throws Error when the
// symbol is not interpreted by the theory.
bool theoryHolds(TheoryId theory, TheorySym sym,
                 const std::vector<Location>& args);

struct SearchBounds {
  int maxHeapSize = 4;
  Location maxLocation = 8;
  int extraExistentialBudget = 0;
  uint64_t nodeLimit = 0;  // 0 = unlimited; exceeding throws BudgetExceeded
};

// Exact satisfaction verdict for (store, heap) |= f under the rules of
// `sid` and theory `T`. Existential witnesses that unification leaves
// unconstrained range over the heap's locations, the store image and
// {0..extraExistentialBudget}. Throws NonPcSIDError when a rule violates
// progress (the termination guarantee would be void).
bool modelCheck(const Structure& s, const Formula& f, const SID& sid,
                TheoryId theory, int extraExistentialBudget = 0,
                uint64_t nodeLimit = 0);

// True iff the store is injective, s satisfies the left side and no member
// of the right side.
bool checkCountermodel(const Structure& s, const Sequent& sq,
                       int extraExistentialBudget = 0,
                       uint64_t nodeLimit = 0);

// Deterministic bounded search: heaps by increasing size, stores
// lexicographically; returns the first countermodel within bounds.
std::optional<Structure> countermodelSearch(const Sequent& sq,
                                            const SearchBounds& b,
                                            int jobs = 1);

// All within-bounds structures over fv(f) satisfying f, in canonical order
// (store lexicographic, then heap). Test oracle; exponential.
std::vector<Structure> enumerateModels(const Formula& f, const SID& sid,
                                       TheoryId theory, const SearchBounds& b);
// Same, over an explicit variable universe.
std::vector<Structure> enumerateModels(const Formula& f, const SID& sid,
                                       TheoryId theory, const SearchBounds& b,
                                       const std::vector<Var>& universe);

// JSON serialization: {"store": {"x": 1}, "heap": {"1": [2]}}.
std::string structureToJson(const Structure& s);
Structure structureFromJson(const std::string& text);

}  // namespace slkit

#endif  // SLKIT_SEMANTICS_HPP
