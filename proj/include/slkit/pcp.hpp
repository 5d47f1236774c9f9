// Generator for entailment instances from Post Correspondence Problem
// instances: the kappa=6 rule system with the W/A/B/C predicate families,
// the target sequent, and witness-structure construction.
#ifndef SLKIT_PCP_HPP
#define SLKIT_PCP_HPP

#include <optional>
#include <string>
#include <vector>

#include "slkit/core.hpp"
#include "slkit/semantics.hpp"

namespace slkit {

struct InstanceInvariantError : Error {
  using Error::Error;
};
struct NotASolutionError : Error {
  using Error::Error;
};
struct OffsetOutOfRangeError : Error {
  using Error::Error;
};

// Two equal-length sequences of words over a finite alphabet; every word has
// at least two characters.
struct PcpInstance {
  std::vector<std::string> u;
  std::vector<std::string> v;

  void validate() const;  // throws InstanceInvariantError
  int tiles() const { return static_cast<int>(u.size()); }
  int maxWordLength() const;
};

// (tile, offset), both 1-based. Position (i,j) denotes the j-th character of
// u_i or v_i; the offset may exceed the word it is read against.
struct Position {
  int tile = 1;
  int offset = 1;

  bool operator==(const Position& o) const {
    return tile == o.tile && offset == o.offset;
  }
  bool operator<(const Position& o) const {
    if (tile != o.tile) return tile < o.tile;
    return offset < o.offset;
  }
};

enum class Side { U, V };

// All positions (i,j) with i in 1..n and j in 1..m.
std::vector<Position> allPositions(const PcpInstance& inst);
bool inB(const Position& p);  // offset == 1
bool inE(const PcpInstance& inst, Side w, const Position& p);

// The character w(p), when defined.
std::optional<char> wordChar(const PcpInstance& inst, Side w,
                             const Position& p);

// p <| q: u(p) and v(q) are both defined and equal.
bool matchRelation(const PcpInstance& inst, const Position& p,
                   const Position& q);

// p ->^w successors: interior step or the beginnings of every tile at a
// word boundary. Throws OffsetOutOfRangeError when p lies outside P.
std::vector<Position> successorRelation(const PcpInstance& inst, Side w,
                                        const Position& p);

struct EncodedProblem {
  SID sid;           // kappa = 6
  Sequent sequent;   // W(x,v) |- A(x,v), EX... B(x,w), C(x,v)
  std::vector<Var> variableVector;  // one variable per position, then nil
  TheoryId theory = TheoryId::NatSucc;
};

Var positionVar(const Position& p);

// Emits the full rule system and target sequent. Theory must be nat_succ or
// nat_leq. Deterministic: equal instances give equal output.
EncodedProblem encode(const PcpInstance& inst, TheoryId theory);

// The canonical structure for a PCP solution (a non-empty tile sequence
// whose u- and v-concatenations agree): dummy cell, one list cell per
// witness character, three marker cells each. Heap size 4*m'+1.
Structure buildWitnessStructure(const PcpInstance& inst,
                                const std::vector<int>& solution,
                                TheoryId theory);

// All W-models up to the given witness length, obtained by walking the
// match/successor relations with the canonical marker locations.
std::vector<Structure> enumerateWModels(const PcpInstance& inst,
                                        TheoryId theory, int maxWitnessLen);

// Parses the CLI tile syntax "ab:ab,ba:ab".
PcpInstance parseTiles(const std::string& spec);

}  // namespace slkit

#endif  // SLKIT_PCP_HPP
