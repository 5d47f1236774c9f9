#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "slkit/core.hpp"
#include "slkit/parser.hpp"
#include "slkit/semantics.hpp"
#include "support/corpus.hpp"
#include "support/oracle.hpp"

using namespace slkit;

namespace {

Structure st(std::initializer_list<std::pair<const char*, Location>> store,
             std::initializer_list<std::pair<Location, std::vector<Location>>>
                 heap) {
  Structure s;
  for (const auto& [n, l] : store) s.store[Var(n)] = l;
  for (const auto& [a, t] : heap) s.heap[a] = t;
  return s;
}

Formula randomCheckFormula(std::mt19937& rng, int depth) {
  std::uniform_int_distribution<int> pick(0, 7);
  const char* names[] = {"x", "y", "z", "w"};
  auto rv = [&] {
    return Var(names[std::uniform_int_distribution<int>(0, 3)(rng)]);
  };
  int k = depth <= 0 ? std::uniform_int_distribution<int>(0, 4)(rng)
                     : pick(rng);
  switch (k) {
    case 0: return Formula::emp();
    case 1: return Formula::pointsTo(rv(), {rv()});
    case 2: return Formula::predAtom("ls", {rv(), rv()});
    case 3: return Formula::theoryAtom(TheorySym::Eq, {rv(), rv()});
    case 4: return Formula::theoryAtom(TheorySym::Neq, {rv(), rv()});
    case 5:
      return Formula::star(randomCheckFormula(rng, depth - 1),
                           randomCheckFormula(rng, depth - 1));
    case 6:
      return Formula::disj(randomCheckFormula(rng, depth - 1),
                           randomCheckFormula(rng, depth - 1));
    default: {
      Var b("e");
      return Formula::exists(
          b, Formula::star(Formula::pointsTo(rv(), {b}),
                           randomCheckFormula(rng, depth - 1)));
    }
  }
}

}  // namespace

TEST_CASE("modelCheck on the list rules") {
  SID ls = corpus::lsProblem().sid;
  Formula f = parseFormula("ls(x,y)");
  CHECK(modelCheck(st({{"x", 1}, {"y", 2}}, {{1, {2}}}), f, ls,
                   TheoryId::Equality));
  CHECK(!modelCheck(st({{"x", 1}, {"y", 2}}, {}), f, ls, TheoryId::Equality));
  CHECK(modelCheck(st({{"x", 1}, {"y", 3}}, {{1, {2}}, {2, {3}}}), f, ls,
                   TheoryId::Equality));
  // a cycle back to x is not a segment to y
  CHECK(!modelCheck(st({{"x", 1}, {"y", 3}}, {{1, {2}}, {2, {1}}}), f, ls,
                    TheoryId::Equality));
}

TEST_CASE("modelCheck on sorted lists under nat_leq") {
  SID ils = corpus::ilsProblem().sid;
  Formula f = parseFormula("ils(x,y,u,v)");
  CHECK(modelCheck(st({{"x", 5}, {"y", 9}, {"u", 1}, {"v", 10}}, {{5, {9}}}),
                   f, ils, TheoryId::NatLeq));
  // element above the bound
  CHECK(!modelCheck(st({{"x", 5}, {"y", 9}, {"u", 1}, {"v", 4}}, {{5, {9}}}),
                    f, ils, TheoryId::NatLeq));
  // two-element sorted segment: 2 -> 5 -> 9 within [1,10]
  CHECK(modelCheck(
      st({{"x", 2}, {"y", 9}, {"u", 1}, {"v", 10}}, {{2, {5}}, {5, {9}}}), f,
      ils, TheoryId::NatLeq));
  // unsorted: 5 -> 2
  CHECK(!modelCheck(
      st({{"x", 5}, {"y", 9}, {"u", 1}, {"v", 10}}, {{5, {2}}, {2, {9}}}), f,
      ils, TheoryId::NatLeq));
}

TEST_CASE("theory atoms require empty heaps") {
  SID ls = corpus::lsProblem().sid;
  for (auto theory : {TheoryId::Equality, TheoryId::NatSucc, TheoryId::NatLeq}) {
    Formula eq = parseFormula("x = x");
    CHECK(modelCheck(st({{"x", 1}}, {}), eq, ls, theory));
    CHECK(!modelCheck(st({{"x", 1}}, {{1, {1}}}), eq, ls, theory));
  }
  CHECK(!modelCheck(st({{"x", 1}}, {}), parseFormula("false"), ls,
                    TheoryId::Equality));
}

TEST_CASE("theory evaluation fixes S and Sbar per theory") {
  CHECK(theoryHolds(TheoryId::NatSucc, TheorySym::S, {3, 4}));
  CHECK(!theoryHolds(TheoryId::NatSucc, TheorySym::S, {3, 5}));
  CHECK(theoryHolds(TheoryId::NatSucc, TheorySym::Sbar, {3, 5}));
  // on equal locations Sbar is the complement of S
  CHECK(theoryHolds(TheoryId::NatSucc, TheorySym::Sbar, {3, 3}));
  CHECK(theoryHolds(TheoryId::NatLeq, TheorySym::S, {3, 3}));
  CHECK(theoryHolds(TheoryId::NatLeq, TheorySym::Sbar, {3, 3}));
  CHECK(theoryHolds(TheoryId::NatLeq, TheorySym::Sbar, {5, 3}));
  CHECK(!theoryHolds(TheoryId::NatLeq, TheorySym::S, {5, 3}));
  CHECK(theoryHolds(TheoryId::NatSucc, TheorySym::Succ, {3, 4}));
  CHECK(theoryHolds(TheoryId::NatLeq, TheorySym::Leq, {3, 4}));
  CHECK(theoryHolds(TheoryId::NatLeq, TheorySym::Geq, {4, 3}));
  CHECK_THROWS_AS(theoryHolds(TheoryId::Equality, TheorySym::S, {1, 2}),
                  Error);
}

TEST_CASE("modelCheck rejects non-progressing systems") {
  SID bad = parseProblem("sid { kappa = 1; p(x) <= p(x) * x = x; }").sid;
  CHECK_THROWS_AS(modelCheck(st({{"x", 1}}, {}), parseFormula("p(x)"), bad,
                             TheoryId::Equality),
                  NonPcSIDError);
}

TEST_CASE("modelCheck rejects unknown predicates") {
  SID ls = corpus::lsProblem().sid;
  CHECK_THROWS_AS(modelCheck(st({{"x", 1}}, {{1, {1}}}),
                             parseFormula("nosuch(x)"), ls,
                             TheoryId::Equality),
                  UnknownPredicateError);
}

TEST_CASE("satisfaction ignores store entries outside fv") {
  SID ls = corpus::lsProblem().sid;
  Formula f = parseFormula("ls(x,y)");
  Structure a = st({{"x", 1}, {"y", 3}}, {{1, {2}}, {2, {3}}});
  Structure b = a;
  b.store[Var("junk")] = 7;
  CHECK(modelCheck(a, f, ls, TheoryId::Equality) ==
        modelCheck(b, f, ls, TheoryId::Equality));
}

TEST_CASE("equality-theory satisfaction is invariant under bijections") {
  SID ls = corpus::lsProblem().sid;
  std::mt19937 rng(11);
  std::vector<Var> universe{Var("x"), Var("y"), Var("z"), Var("w")};
  corpus::StructGen gen(5);
  for (int i = 0; i < 60; ++i) {
    Structure s = gen.structure(universe, 1, 3, 6);
    Formula f = randomCheckFormula(rng, 2);
    bool before = modelCheck(s, f, ls, TheoryId::Equality, 6);
    // apply the permutation l -> (l * 3 + 1) mod 17 (injective on 0..16)
    auto pi = [](Location l) { return (l * 3 + 1) % 17; };
    Structure t;
    for (const auto& [v, l] : s.store) t.store[v] = pi(l);
    for (const auto& [a, ts] : s.heap) {
      std::vector<Location> nts;
      for (Location l : ts) nts.push_back(pi(l));
      t.heap[pi(a)] = nts;
    }
    bool after = modelCheck(t, f, ls, TheoryId::Equality, 17);
    CHECK(before == after);
  }
}

TEST_CASE("modelCheck agrees with the brute-force oracle") {
  SID ls = corpus::lsProblem().sid;
  std::mt19937 rng(2024);
  corpus::StructGen gen(77);
  std::vector<Var> universe{Var("x"), Var("y"), Var("z"), Var("w")};
  int checked = 0;
  for (int i = 0; i < 300; ++i) {
    Structure s = gen.structure(universe, 1, 4, 6);
    Formula f = randomCheckFormula(rng, 3);
    bool engine = modelCheck(s, f, ls, TheoryId::Equality, 6);
    bool brute = oracle::modelCheck(s, f, ls, TheoryId::Equality, 6);
    CHECK(engine == brute);
    ++checked;
  }
  CHECK(checked == 300);
}

TEST_CASE("heap splitting matches the partition oracle on star formulas") {
  SID ls = corpus::lsProblem().sid;
  corpus::StructGen gen(31);
  std::vector<Var> universe{Var("x"), Var("y"), Var("z"), Var("w")};
  std::mt19937 rng(5);
  for (int i = 0; i < 150; ++i) {
    Structure s = gen.structure(universe, 1, 4, 5);
    Formula f = Formula::star(randomCheckFormula(rng, 1),
                              randomCheckFormula(rng, 1));
    CHECK(modelCheck(s, f, ls, TheoryId::Equality, 5) ==
          oracle::modelCheck(s, f, ls, TheoryId::Equality, 5));
  }
}

TEST_CASE("checkCountermodel requires injectivity and a failing rhs") {
  ProblemFile pf = corpus::lsProblem("ls(x,y) |- x -> (y)");
  Sequent sq = sequents(pf)[0];
  Structure two = st({{"x", 1}, {"y", 3}}, {{1, {2}}, {2, {3}}});
  CHECK(checkCountermodel(two, sq));

  Sequent refl = sq;
  refl.rhs = {sq.lhs};
  CHECK(!checkCountermodel(two, refl));

  Structure notInjective = st({{"x", 1}, {"y", 1}}, {{1, {1}}});
  CHECK(!checkCountermodel(notInjective, sq));
}

TEST_CASE("countermodelSearch finds the minimal list countermodel") {
  ProblemFile pf = corpus::lsProblem("ls(x,y) |- x -> (y)");
  SearchBounds b;
  b.maxHeapSize = 3;
  b.maxLocation = 5;
  auto model = countermodelSearch(sequents(pf)[0], b);
  REQUIRE(model.has_value());
  CHECK(model->heapSize() == 2);
  CHECK(checkCountermodel(*model, sequents(pf)[0]));
  // deterministic: first store lexicographically, smallest heap
  CHECK(structureToJson(*model) ==
        "{\"heap\":{\"0\":[1],\"1\":[1]},\"store\":{\"x\":0,\"y\":1}}");
}

TEST_CASE("countermodelSearch proves nothing but finds nothing here") {
  ProblemFile pf = corpus::lsProblem("x -> (y) |- ls(x,y)");
  SearchBounds b;
  b.maxHeapSize = 3;
  b.maxLocation = 5;
  CHECK(!countermodelSearch(sequents(pf)[0], b).has_value());

  ProblemFile refl = corpus::lsProblem("ls(x,y) |- ls(x,y)");
  CHECK(!countermodelSearch(sequents(refl)[0], b).has_value());
}

TEST_CASE("sorted list segments entail plain list segments within bounds") {
  ProblemFile pf = parseProblem(
      "sid { kappa = 1;"
      "  ls(x,y) <= x -> (y);"
      "  ls(x,y) <= EX z . x -> (z) * ls(z,y);"
      "  ils(x,y,u,v) <= x -> (y) * leq(x,v) * geq(x,u);"
      "  ils(x,y,u,v) <= EX z . x -> (z) * ils(z,y,x,v) * leq(x,v) * "
      "geq(x,u);"
      "} theory nat_leq;"
      "entail { ils(x,y,u,v) |- ls(x,y) }");
  SearchBounds b;
  b.maxHeapSize = 3;
  b.maxLocation = 5;
  CHECK(!countermodelSearch(sequents(pf)[0], b).has_value());
  // the converse is refutable: an unsorted two-cell list
  ProblemFile conv = parseProblem(
      "sid { kappa = 1;"
      "  ls(x,y) <= x -> (y);"
      "  ls(x,y) <= EX z . x -> (z) * ls(z,y);"
      "  ils(x,y,u,v) <= x -> (y) * leq(x,v) * geq(x,u);"
      "  ils(x,y,u,v) <= EX z . x -> (z) * ils(z,y,x,v) * leq(x,v) * "
      "geq(x,u);"
      "} theory nat_leq;"
      "entail { ls(x,y) |- ils(x,y,u,v) }");
  auto m = countermodelSearch(sequents(conv)[0], b);
  REQUIRE(m.has_value());
  CHECK(checkCountermodel(*m, sequents(conv)[0]));
}

TEST_CASE("countermodelSearch is deterministic across jobs") {
  ProblemFile pf = corpus::lsProblem("ls(x,y) |- x -> (y)");
  SearchBounds b;
  b.maxHeapSize = 3;
  b.maxLocation = 6;
  auto one = countermodelSearch(sequents(pf)[0], b, 1);
  auto four = countermodelSearch(sequents(pf)[0], b, 4);
  REQUIRE(one.has_value());
  REQUIRE(four.has_value());
  CHECK(structureToJson(*one) == structureToJson(*four));
}

TEST_CASE("countermodelSearch respects the node budget") {
  ProblemFile pf = corpus::lsProblem("ls(x,y) |- x -> (y)");
  SearchBounds b;
  b.maxHeapSize = 3;
  b.maxLocation = 6;
  b.nodeLimit = 5;
  CHECK_THROWS_AS(countermodelSearch(sequents(pf)[0], b),
                  BudgetExceededError);
}

TEST_CASE("enumerateModels lists exactly the bounded models") {
  SID ls = corpus::lsProblem().sid;
  SearchBounds b;
  b.maxHeapSize = 1;
  b.maxLocation = 3;
  auto models = enumerateModels(parseFormula("ls(x,y)"), ls,
                                TheoryId::Equality, b);
  // every store pair (sx, sy) with the single cell sx -> (sy)
  CHECK(models.size() == 9);
  for (const auto& m : models) {
    REQUIRE(m.heapSize() == 1);
    auto cell = *m.heap.begin();
    CHECK(cell.first == m.store.at(Var("x")));
    CHECK(cell.second[0] == m.store.at(Var("y")));
  }

  CHECK(enumerateModels(parseFormula("false"), ls, TheoryId::Equality, b)
            .empty());

  auto empties = enumerateModels(Formula::emp(), ls, TheoryId::Equality, b,
                                 {Var("x")});
  CHECK(empties.size() == 3);  // stores over one variable, empty heap
  for (const auto& m : empties) CHECK(m.heapSize() == 0);
}

TEST_CASE("enumerateModels agrees with oracle filtering") {
  SID ls = corpus::lsProblem().sid;
  SearchBounds b;
  b.maxHeapSize = 2;
  b.maxLocation = 3;
  Formula f = parseFormula("ls(x,y) * y -> (x)");
  auto models = enumerateModels(f, ls, TheoryId::Equality, b);
  // oracle-side: filter all structures
  std::vector<Var> universe{Var("x"), Var("y")};
  int oracleCount = 0;
  for (Location sx = 0; sx < 3; ++sx)
    for (Location sy = 0; sy < 3; ++sy) {
      // heaps of size <= 2 over locations {0,1,2}
      for (int mask = 0; mask < 8; ++mask) {
        if (__builtin_popcount(mask) > 2) continue;
        std::vector<Location> srcs;
        for (int l = 0; l < 3; ++l)
          if (mask & (1 << l)) srcs.push_back(l);
        size_t slots = srcs.size();
        std::vector<Location> ts(slots, 0);
        while (true) {
          Structure s;
          s.store[Var("x")] = sx;
          s.store[Var("y")] = sy;
          for (size_t i = 0; i < slots; ++i) s.heap[srcs[i]] = {ts[i]};
          if (oracle::modelCheck(s, f, ls, TheoryId::Equality, 2)) {
            ++oracleCount;
            CHECK(std::find(models.begin(), models.end(), s) != models.end());
          }
          size_t k = slots;
          while (k > 0) {
            if (++ts[k - 1] < 3) break;
            ts[k - 1] = 0;
            --k;
          }
          if (k == 0 || slots == 0) break;
        }
      }
    }
  CHECK(models.size() == static_cast<size_t>(oracleCount));
}

TEST_CASE("established witness restriction is budget-stable") {
  // On established systems, raising the existential budget never changes
  // predicate-atom verdicts.
  corpus::StructGen gen(13);
  for (uint32_t seed = 0; seed < 12; ++seed) {
    corpus::SidGen sg(seed + 100);
    SID sid = sg.sid();
    if (!checkEstablishment(sid).ok) continue;
    auto it = sid.arities.begin();
    std::vector<Var> args;
    for (int i = 0; i < it->second; ++i)
      args.push_back(Var("t" + std::to_string(i)));
    Formula atom = Formula::predAtom(it->first, args);
    for (int i = 0; i < 40; ++i) {
      Structure s = gen.structure(args, sid.kappa, 3, 5);
      bool small = modelCheck(s, atom, sid, TheoryId::Equality, 0);
      bool big = modelCheck(s, atom, sid, TheoryId::Equality, 8);
      CHECK(small == big);
    }
  }
}

TEST_CASE("prenex and dnf preserve the bounded model set") {
  SID ls = corpus::lsProblem().sid;
  SearchBounds b;
  b.maxHeapSize = 2;
  b.maxLocation = 3;
  std::mt19937 rng(321);
  for (int i = 0; i < 60; ++i) {
    Formula f = randomCheckFormula(rng, 3);
    std::set<Var> fvSet = freeVars(f);
    std::vector<Var> universe(fvSet.begin(), fvSet.end());
    auto reference = enumerateModels(f, ls, TheoryId::Equality, b, universe);
    auto viaPrenex =
        enumerateModels(prenex(f), ls, TheoryId::Equality, b, universe);
    CHECK(reference == viaPrenex);
    Formula joined = Formula::disjAll(dnfSymbolicHeaps(f));
    auto viaDnf =
        enumerateModels(joined, ls, TheoryId::Equality, b, universe);
    CHECK(reference == viaDnf);
  }
}

TEST_CASE("bounded search verdicts match the oracle's blind enumeration") {
  int checked = 0;
  for (uint32_t seed = 0; seed < 24; ++seed) {
    corpus::SidGen gen(seed + 9000);
    Sequent sq = gen.sequent();
    SearchBounds b;
    b.maxHeapSize = 2;
    b.maxLocation = 4;
    auto engine = countermodelSearch(sq, b);
    auto brute = oracle::countermodelSearch(sq, 2, 4);
    CAPTURE(seed);
    CHECK(engine.has_value() == brute.has_value());
    if (engine) CHECK(checkCountermodel(*engine, sq));
    ++checked;
  }
  CHECK(checked == 24);
}

TEST_CASE("structure JSON round-trips") {
  Structure s = st({{"x", 1}, {"y", 2}}, {{1, {2, 3}}, {5, {0, 1}}});
  std::string j = structureToJson(s);
  CHECK(j ==
        "{\"heap\":{\"1\":[2,3],\"5\":[0,1]},\"store\":{\"x\":1,\"y\":2}}");
  CHECK(structureFromJson(j) == s);
}
