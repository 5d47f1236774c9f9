// Acceptance suite: one checked criterion per test case, one printed
// PASS/FAIL line each.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <chrono>
#include <cstdio>
#include <random>

#include "slkit/conditions.hpp"
#include "slkit/core.hpp"
#include "slkit/parser.hpp"
#include "slkit/pcp.hpp"
#include "slkit/semantics.hpp"
#include "slkit/transform.hpp"
#include "../support/corpus.hpp"
#include "../support/oracle.hpp"

using namespace slkit;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;

  void fail(const std::string& why) {
    ok = false;
    if (detail.empty()) detail = why;
  }
};

void report(int n, const char* label, const Outcome& o) {
  std::printf("[%s] criterion %d: %s%s%s\n", o.ok ? "PASS" : "FAIL", n, label,
              o.detail.empty() ? "" : " -- ", o.detail.c_str());
  std::fflush(stdout);
  CHECK_MESSAGE(o.ok, "criterion ", n, ": ", o.detail);
}

Sequent parseSequent(const std::string& text) {
  return sequents(parseProblem(text)).at(0);
}

bool noEqualityAnywhere(const Sequent& sq) {
  auto clean = [](const Formula& f) {
    auto syms = theorySymsIn(f);
    return !syms.count(TheorySym::Eq) && !syms.count(TheorySym::Neq);
  };
  if (!clean(sq.lhs)) return false;
  for (const auto& g : sq.rhs)
    if (!clean(g)) return false;
  for (const auto& r : sq.sid.rules)
    if (!clean(r.body)) return false;
  return true;
}

// The full elimination corpus: the hand-built validity corpus plus random
// established systems.
std::vector<Sequent> eliminationCorpus() {
  std::vector<Sequent> out;
  for (const auto& c : corpus::validityCorpus()) out.push_back(c.sequent);
  int added = 0;
  for (uint32_t seed = 0; added < 10 && seed < 200; ++seed) {
    corpus::SidGen gen(seed + 1000);
    Sequent sq = gen.sequent();
    if (!checkEstablishment(sq.sid).ok) continue;
    out.push_back(sq);
    ++added;
  }
  return out;
}

}  // namespace

TEST_CASE("criterion 1: per-step golden suite") {
  auto start = std::chrono::steady_clock::now();
  Outcome o;

  // Step 1 fragment.
  {
    Sequent in = parseSequent(
        "sid { kappa = 1; r(x) <= x -> (x); }"
        "entail { p(x1,x2) |- r(x1) * r(x2) }");
    Sequent out = step1SymbolicHeapsAndParams(in);
    const std::string golden =
        "sid {\n"
        "  kappa = 1;\n"
        "  r%e(x,x1,x2) <= x -> (x);\n"
        "}\n"
        "theory equality;\n"
        "entail {\n"
        "  p%e(x1,x2,x1,x2) |- r%e(x1,x1,x2) * r%e(x2,x1,x2);\n"
        "}\n";
    if (printProblem(toProblemFile(out)) != golden)
      o.fail("step 1 output diverges from golden");
    // The deduplicated surface form r'(x1,x2) / r'(x2,x1) with
    // r'(x,y) <= x -> (x) appears after duplicate-parameter collapse.
    Sequent collapsed =
        step3CollapseRepeatedArgs(step2InstantiateExistentials(out));
    if (printFormula(collapsed.rhs[0]) !=
        "r%e%m1_1_3(x1,x2) * r%e%m1_2_1(x2,x1)")
      o.fail("collapsed step 1 surface form diverges");
  }

  // Step 2 fragment, formula side. The construction enumerates all
  // idempotent merge substitutions; the four anchor images that avoid
  // existential-to-existential merges must appear verbatim among the
  // disjuncts.
  {
    Sequent in = parseSequent(
        "sid { kappa = 1; p(a,b) <= a -> (b); }"
        "entail { EX y1 . EX y2 . p(x,y1) * p(x,y2) |- emp }");
    Sequent out = step2InstantiateExistentials(in);
    const std::string golden =
        "(EX y1 . EX y2 . p(x,y1) * p(x,y2) * y1 != y2 * y1 != x * y2 != x)"
        " \\/ (EX y2 . p(x,x) * p(x,y2) * y2 != x)"
        " \\/ (EX y1 . p(x,y1) * p(x,y1) * y1 != x)"
        " \\/ (EX y1 . p(x,y1) * p(x,x) * y1 != x)"
        " \\/ p(x,x) * p(x,x)";
    if (printFormula(out.lhs) != golden)
      o.fail("step 2 formula output diverges from golden");
    const char* anchors[] = {
        "EX y1 . EX y2 . p(x,y1) * p(x,y2) * y1 != y2 * y1 != x * y2 != x",
        "EX y2 . p(x,x) * p(x,y2) * y2 != x",
        "EX y1 . p(x,y1) * p(x,x) * y1 != x",
        "p(x,x) * p(x,x)"};
    for (const char* d : anchors)
      if (printFormula(out.lhs).find(d) == std::string::npos)
        o.fail(std::string("anchor disjunct missing: ") + d);
  }

  // Step 2 fragment, rule side.
  {
    Sequent in = parseSequent(
        "sid { kappa = 1;"
        "  p(x) <= EX z . EX u . x -> (z) * q(z,u);"
        "  q(a,b) <= a -> (b);"
        "} entail { p(x) |- emp }");
    Sequent out = step2InstantiateExistentials(in);
    std::vector<std::string> got;
    for (const auto& r : out.sid.rules)
      if (r.head == "p") got.push_back(printRule(r));
    const std::vector<std::string> golden = {
        "p(x) <= EX z . EX u . x -> (z) * q(z,u) * z != u * z != x * u != x",
        "p(x) <= EX u . x -> (x) * q(x,u) * u != x",
        "p(x) <= EX z . x -> (z) * q(z,z) * z != x",
        "p(x) <= EX z . x -> (z) * q(z,x) * z != x",
        "p(x) <= x -> (x) * q(x,x)"};
    if (got != golden) o.fail("step 2 rule set diverges from golden");
  }

  // Step 3 fragment.
  {
    Sequent in = parseSequent(
        "sid { kappa = 1;"
        "  p(y1,y2,y3) <= y1 -> (y2) * q(y2,y3) * y1 = y3;"
        "  p(y1,y2,y3) <= y1 -> (y2) * r(y2,y3) * y1 = y2;"
        "} entail { p(x,y,x) |- emp }");
    Sequent out = step3CollapseRepeatedArgs(in);
    const std::string golden =
        "sid {\n"
        "  kappa = 1;\n"
        "  p%m1_2_1(y1,y2) <= y1 -> (y2) * q(y2,y1);\n"
        "}\n"
        "theory equality;\n"
        "entail {\n"
        "  p%m1_2_1(x,y) |- emp;\n"
        "}\n";
    if (printProblem(toProblemFile(out)) != golden)
      o.fail("step 3 output diverges from golden");
  }

  // Step 4 fragment.
  {
    Sequent in = parseSequent(
        "sid { kappa = 1;"
        "  p(a,b,c,d) <= a -> (c) * r0(c);"
        "  q(a,b,c,d) <= a -> (c) * r0(c);"
        "  r0(t) <= t -> (t);"
        "} entail { p(x,y,z,zp) * q(x,y,z,zp) * zp -> (zp) |- emp }");
    Sequent out = step4AllocateFreeVars(in);
    const std::string goldenLhs =
        "p(x,y,z,zp,u) * q(x,y,z,zp,u) * zp -> (zp,u) * u -> (x,x) * "
        "y -> (x,x)";
    if (printFormula(out.lhs) != goldenLhs)
      o.fail("step 4 formula output diverges from golden");
    bool pointsToExtended = true;
    for (const auto& r : out.sid.rules)
      if (printRule(r).find(",u)") == std::string::npos)
        pointsToExtended = false;
    if (!pointsToExtended || out.sid.kappa != 2)
      o.fail("step 4 kappa extension diverges");
  }

  auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                std::chrono::steady_clock::now() - start)
                .count();
  if (ms >= 1000) o.fail("took " + std::to_string(ms) + " ms (limit 1 s)");
  report(1, "per-step transformation goldens (steps 1-4)", o);
}

TEST_CASE("criterion 2: no-equality postcondition over the corpus") {
  auto start = std::chrono::steady_clock::now();
  Outcome o;
  auto corpus = eliminationCorpus();
  if (corpus.size() < 20)
    o.fail("corpus has only " + std::to_string(corpus.size()) + " sequents");
  int idx = 0;
  for (const auto& sq : corpus) {
    ++idx;
    try {
      auto [out, trace] = eliminateEqualities(sq);
      if (!noEqualityAnywhere(out))
        o.fail("sequent #" + std::to_string(idx) + " kept an equality");
      if (!checkProgress(out.sid).ok)
        o.fail("sequent #" + std::to_string(idx) + " broke progress");
      if (!checkConnectivity(out.sid).ok)
        o.fail("sequent #" + std::to_string(idx) + " broke connectivity");
      if (!checkEstablishment(out.sid).ok)
        o.fail("sequent #" + std::to_string(idx) + " broke establishment");
      if (!computeAllocMap(out.sid).compatible)
        o.fail("sequent #" + std::to_string(idx) + " not alloc-compatible");
    } catch (const Error& e) {
      o.fail("sequent #" + std::to_string(idx) + " threw: " + e.what());
    }
  }
  auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                std::chrono::steady_clock::now() - start)
                .count();
  if (ms >= 60000) o.fail("took " + std::to_string(ms) + " ms (limit 60 s)");
  report(2, "no ~ or != after elimination, side conditions preserved", o);
}

TEST_CASE("criterion 3: bounded equivalence oracle on the validity corpus") {
  auto start = std::chrono::steady_clock::now();
  Outcome o;
  auto corpus = corpus::validityCorpus();
  if (corpus.size() != 12) o.fail("corpus must hold 12 sequents");
  for (const auto& c : corpus) {
    // ground truth by exhaustive bounded search with the independent
    // brute-force model checker
    auto ground = oracle::countermodelSearch(c.sequent, 3, 6);
    if (ground.has_value() == c.valid)
      o.fail(c.name + ": ground truth disagrees with the corpus label");
    // production engine agrees on the original
    SearchBounds orig;
    orig.maxHeapSize = 3;
    orig.maxLocation = 6;
    auto engineOrig = countermodelSearch(c.sequent, orig);
    if (engineOrig.has_value() != ground.has_value())
      o.fail(c.name + ": engine verdict diverges from oracle");
    // the transformed sequent's bounded verdict matches
    auto [out, trace] = eliminateEqualities(c.sequent);
    SearchBounds mapped;
    mapped.maxHeapSize =
        3 + static_cast<int>(freeVars(c.sequent).size()) + 1;
    mapped.maxLocation = 8;
    auto transformed = countermodelSearch(out, mapped);
    if (transformed.has_value() != ground.has_value())
      o.fail(c.name + ": transformed verdict diverges");
  }
  auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                std::chrono::steady_clock::now() - start)
                .count();
  if (ms >= 600000) o.fail("took " + std::to_string(ms) + " ms (limit 10 min)");
  report(3, "validity verdicts agree before and after elimination (12/12)",
         o);
}

TEST_CASE("criterion 4: width growth stays within the quartic bound") {
  Outcome o;
  // Fixed constant, frozen ahead of time; quartic growth beyond it fails.
  const double C = 10.0;
  double worst = 0;
  for (const auto& sq : eliminationCorpus()) {
    auto [out, trace] = eliminateEqualities(sq);
    double win = static_cast<double>(width(sq));
    double wout = static_cast<double>(width(out));
    double ratio = wout / (win * win * win * win);
    worst = std::max(worst, ratio);
    if (ratio > C)
      o.fail("ratio " + std::to_string(ratio) + " exceeds C=" +
             std::to_string(C));
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "max width(out)/width(in)^4 = %.4f", worst);
  o.detail = o.ok ? buf : o.detail;
  report(4, "width(out) <= C * width(in)^4 with C = 10", o);
}

TEST_CASE("criterion 5: PCP positive instance yields a countermodel") {
  auto start = std::chrono::steady_clock::now();
  Outcome o;
  PcpInstance inst;
  inst.u = {"ab"};
  inst.v = {"ab"};
  for (TheoryId theory : {TheoryId::NatSucc, TheoryId::NatLeq}) {
    EncodedProblem enc = encode(inst, theory);
    Structure s = buildWitnessStructure(inst, {1}, theory);
    if (s.heapSize() != 9)
      o.fail(std::string(theoryName(theory)) + ": heap size " +
             std::to_string(s.heapSize()) + " instead of 9");
    if (!modelCheck(s, enc.sequent.lhs, enc.sid, theory))
      o.fail(std::string(theoryName(theory)) + ": witness does not satisfy W");
    if (!checkCountermodel(s, enc.sequent))
      o.fail(std::string(theoryName(theory)) +
             ": witness is not a countermodel");
  }
  auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                std::chrono::steady_clock::now() - start)
                .count();
  if (ms >= 60000) o.fail("took " + std::to_string(ms) + " ms (limit 60 s)");
  report(5, "ab:ab witness has heap size 9 and refutes A, B, C", o);
}

TEST_CASE("criterion 6: PCP negative instance admits no countermodel") {
  auto start = std::chrono::steady_clock::now();
  Outcome o;
  PcpInstance inst;
  inst.u = {"aa"};
  inst.v = {"aab"};
  EncodedProblem enc = encode(inst, TheoryId::NatSucc);
  auto models = enumerateWModels(inst, TheoryId::NatSucc, 6);
  for (const auto& m : models)
    if (checkCountermodel(m, enc.sequent))
      o.fail("found a spurious countermodel");
  auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                std::chrono::steady_clock::now() - start)
                .count();
  if (ms >= 300000) o.fail("took " + std::to_string(ms) + " ms (limit 5 min)");
  report(6, "aa:aab yields no countermodel up to witness length 6", o);
}

TEST_CASE("criterion 7: engine and brute-force oracle agree on 1000 pairs") {
  Outcome o;
  SID ls = corpus::lsProblem().sid;
  SID ils = corpus::ilsProblem().sid;
  std::mt19937 rng(424242);
  corpus::StructGen gen(8);
  std::vector<Var> universe{Var("x"), Var("y"), Var("z"), Var("w")};
  auto randomFormula = [&](auto&& self, int depth, bool nat) -> Formula {
    std::uniform_int_distribution<int> pick(0, depth <= 0 ? 4 : 7);
    auto rv = [&] {
      return universe[std::uniform_int_distribution<int>(0, 3)(rng)];
    };
    switch (pick(rng)) {
      case 0: return Formula::emp();
      case 1: return Formula::pointsTo(rv(), {rv()});
      case 2:
        return nat ? Formula::predAtom("ils", {rv(), rv(), rv(), rv()})
                   : Formula::predAtom("ls", {rv(), rv()});
      case 3:
        return nat ? Formula::theoryAtom(TheorySym::Leq, {rv(), rv()})
                   : Formula::theoryAtom(TheorySym::Eq, {rv(), rv()});
      case 4: return Formula::theoryAtom(TheorySym::Neq, {rv(), rv()});
      case 5:
        return Formula::star(self(self, depth - 1, nat),
                             self(self, depth - 1, nat));
      case 6:
        return Formula::disj(self(self, depth - 1, nat),
                             self(self, depth - 1, nat));
      default:
        return Formula::exists(
            Var("e"), Formula::star(Formula::pointsTo(rv(), {Var("e")}),
                                    self(self, depth - 1, nat)));
    }
  };
  int agreements = 0;
  for (int i = 0; i < 1000; ++i) {
    bool nat = i % 3 == 0;
    const SID& sid = nat ? ils : ls;
    TheoryId theory = nat ? TheoryId::NatLeq : TheoryId::Equality;
    Structure s = gen.structure(universe, 1, 4, 6);
    Formula f = randomFormula(randomFormula, 2, nat);
    bool engine = modelCheck(s, f, sid, theory, 6);
    bool brute = oracle::modelCheck(s, f, sid, theory, 6);
    if (engine == brute) {
      ++agreements;
    } else {
      o.fail("pair #" + std::to_string(i) + " diverges on " +
             printFormula(f));
    }
  }
  o.detail = o.ok ? std::to_string(agreements) + "/1000 agree" : o.detail;
  report(7, "modelCheck matches the independent evaluator", o);
}

TEST_CASE("criterion 8: alloc-compatibility construction is sound") {
  Outcome o;
  SearchBounds b;
  b.maxHeapSize = 3;
  b.maxLocation = 5;
  int tested = 0;
  for (uint32_t seed = 0; tested < 10 && seed < 300; ++seed) {
    corpus::SidGen gen(seed + 7000);
    SID sid = gen.sid();
    if (!checkEstablishment(sid).ok) continue;
    ++tested;
    for (const auto& [pred, arity] : sid.arities) {
      std::vector<Var> args;
      for (int i = 0; i < arity; ++i)
        args.push_back(Var("t" + std::to_string(i)));
      Formula atom = Formula::predAtom(pred, args);
      Sequent sq{atom, {Formula::emp()}, sid, TheoryId::Equality};
      Sequent out = makeAllocCompatible(sq);
      auto res = computeAllocMap(out.sid);
      if (!res.compatible || !verifyAllocMap(out.sid, res.alloc))
        o.fail("SID #" + std::to_string(tested) + " output not compatible");
      auto before = enumerateModels(atom, sid, TheoryId::Equality, b, args);
      auto after =
          enumerateModels(out.lhs, out.sid, TheoryId::Equality, b, args);
      if (before != after)
        o.fail("SID #" + std::to_string(tested) + ": models changed for " +
               pred);
    }
  }
  if (tested < 10) o.fail("only generated " + std::to_string(tested) + " SIDs");
  report(8, "splitting is alloc-compatible and model-equivalent (10 SIDs)",
         o);
}
