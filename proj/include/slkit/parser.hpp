// Concrete text syntax for SIDs, formulas, sequents and theory selection,
// plus the canonical serializer (parse . print = identity up to whitespace).
#ifndef SLKIT_PARSER_HPP
#define SLKIT_PARSER_HPP

#include <string>
#include <utility>
#include <vector>

#include "slkit/core.hpp"

namespace slkit {

struct SyntaxError : Error {
  SyntaxError(int line, int col, const std::string& msg)
      : Error("syntax error at " + std::to_string(line) + ":" +
              std::to_string(col) + ": " + msg),
        line(line),
        col(col) {}
  int line;
  int col;
};

struct ArityMismatchError : Error {
  using Error::Error;
};
struct UnknownTheoryError : Error {
  using Error::Error;
};

struct EntailmentBody {
  Formula lhs;
  std::vector<Formula> rhs;
};

struct ProblemFile {
  SID sid;
  TheoryId theory = TheoryId::Equality;
  std::vector<EntailmentBody> entailments;

  int kappa() const { return sid.kappa; }
};

ProblemFile parseProblem(const std::string& text);
std::string printProblem(const ProblemFile& p);

// Bare-formula parsing for tests and tools; performs no arity validation.
Formula parseFormula(const std::string& text);
std::string printFormula(const Formula& f);
std::string printRule(const Rule& r);

std::vector<Sequent> sequents(const ProblemFile& p);
ProblemFile toProblemFile(const Sequent& sq);

}  // namespace slkit

#endif  // SLKIT_PARSER_HPP
