#include "slkit/transform.hpp"

#include <algorithm>
#include <cassert>
#include <functional>
#include <map>

#include "slkit/parser.hpp"

namespace slkit {

namespace {

std::vector<Var> sortedFreeVars(const Sequent& sq) {
  auto fv = freeVars(sq);
  return {fv.begin(), fv.end()};
}

void requirePc(const Sequent& sq, const char* who) {
  ConditionReport prog = checkProgress(sq.sid);
  if (!prog.ok)
    throw NotPcSIDTransformError(std::string(who) + ": SID is not progressing (" +
                                 prog.violations.front().ruleId + ": " +
                                 prog.violations.front().reason + ")");
  ConditionReport conn = checkConnectivity(sq.sid);
  if (!conn.ok)
    throw NotPcSIDTransformError(std::string(who) + ": SID is not connected (" +
                                 conn.violations.front().ruleId + ": " +
                                 conn.violations.front().reason + ")");
}

void requireEstablished(const Sequent& sq, const char* who) {
  ConditionReport est = checkEstablishment(sq.sid);
  if (!est.ok)
    throw NotEstablishedError(std::string(who) + ": SID is not established (" +
                              est.violations.front().ruleId + ": " +
                              est.violations.front().reason + ")");
}

// Applies `rewrite` to every predicate atom of a formula, leaving the rest
// of the tree intact.
Formula mapPredAtoms(const Formula& f,
                     const std::function<Formula(const PredAtom&)>& rewrite) {
  switch (f.kind()) {
    case Formula::Kind::PredAtom:
      return rewrite(f.predAtom());
    case Formula::Kind::Star:
      return Formula::star(mapPredAtoms(f.left(), rewrite),
                           mapPredAtoms(f.right(), rewrite));
    case Formula::Kind::Or:
      return Formula::disj(mapPredAtoms(f.left(), rewrite),
                           mapPredAtoms(f.right(), rewrite));
    case Formula::Kind::Exists:
      return Formula::exists(f.bound(), mapPredAtoms(f.body(), rewrite));
    default:
      return f;
  }
}

Formula mapAtoms(const Formula& f,
                 const std::function<Formula(const Formula&)>& rewrite) {
  switch (f.kind()) {
    case Formula::Kind::PointsTo:
    case Formula::Kind::PredAtom:
    case Formula::Kind::TheoryAtom:
      return rewrite(f);
    case Formula::Kind::Star:
      return Formula::star(mapAtoms(f.left(), rewrite),
                           mapAtoms(f.right(), rewrite));
    case Formula::Kind::Or:
      return Formula::disj(mapAtoms(f.left(), rewrite),
                           mapAtoms(f.right(), rewrite));
    case Formula::Kind::Exists:
      return Formula::exists(f.bound(), mapAtoms(f.body(), rewrite));
    default:
      return f;
  }
}

void forEachFormula(Sequent& sq, const std::function<Formula(Formula)>& fn) {
  sq.lhs = fn(sq.lhs);
  for (auto& g : sq.rhs) g = fn(g);
}

// A symbolic heap taken apart: EX-prefix plus conjunct list.
struct Heaplet {
  std::vector<Var> prefix;
  std::vector<Formula> atoms;

  Formula build() const {
    std::vector<Formula> conj = atoms;
    Formula matrix = conj.empty() ? Formula::emp() : Formula::starAll(conj);
    return Formula::existsAll(prefix, matrix);
  }
};

Heaplet takeApart(const Formula& heap) {
  Heaplet h;
  Formula cur = heap;
  while (cur.kind() == Formula::Kind::Exists) {
    h.prefix.push_back(cur.bound());
    cur = cur.body();
  }
  struct Rec {
    std::vector<Formula>& atoms;
    void run(const Formula& g) {
      if (g.kind() == Formula::Kind::Star) {
        run(g.left());
        run(g.right());
      } else if (g.kind() == Formula::Kind::Emp) {
        // drop: emp * f == f; an all-emp heaplet rebuilds as emp
      } else {
        atoms.push_back(g);
      }
    }
  } rec{h.atoms};
  rec.run(cur);
  return h;
}

}  // namespace

PredId extendedName(const PredId& base) { return base + "%e"; }

PredId allocVariantName(const PredId& base, const std::set<int>& positions) {
  std::string name = base + "%a";
  bool first = true;
  for (int p : positions) {
    if (!first) name += "_";
    name += std::to_string(p);
    first = false;
  }
  return name;
}

PredId mergeVariantName(const PredId& base, const std::vector<int>& pattern) {
  std::string name = base + "%m";
  for (size_t i = 0; i < pattern.size(); ++i) {
    if (i) name += "_";
    name += std::to_string(pattern[i]);
  }
  return name;
}

// --- alloc-compatibility splitting -------------------------------------------

Sequent makeAllocCompatible(const Sequent& sq) {
  requirePc(sq, "makeAllocCompatible");
  requireEstablished(sq, "makeAllocCompatible");

  // Generate variant rules. For each rule and each choice of variants for
  // its body atoms, the head's alloc set is forced by the body.
  SID out;
  out.kappa = sq.sid.kappa;
  struct VariantRule {
    PredId head;
    std::set<int> allocSet;
    Rule rule;
  };
  std::vector<VariantRule> candidates;
  std::map<PredId, int> variantArity;
  for (const auto& r : sq.sid.rules) {
    BodyShape shape = decomposeBody(r.body);
    std::vector<size_t> predAtomIdx;
    for (size_t i = 0; i < shape.atoms.size(); ++i)
      if (shape.atoms[i].kind() == Formula::Kind::PredAtom)
        predAtomIdx.push_back(i);
    // Odometer over subsets for each body atom, last atom fastest.
    std::vector<uint32_t> mask(predAtomIdx.size(), 0);
    while (true) {
      Heaplet body;
      body.prefix = shape.existentials;
      body.atoms = shape.atoms;
      AllocMap assigned;  // variant tags, read back by allocatedVars
      for (size_t k = 0; k < predAtomIdx.size(); ++k) {
        const auto& atom = shape.atoms[predAtomIdx[k]].predAtom();
        std::set<int> A;
        for (size_t b = 0; b < atom.args.size(); ++b)
          if (mask[k] & (1u << b)) A.insert(static_cast<int>(b + 1));
        PredId vname = allocVariantName(atom.pred, A);
        body.atoms[predAtomIdx[k]] = Formula::predAtom(vname, atom.args);
        assigned[vname] = A;
        variantArity[vname] = static_cast<int>(atom.args.size());
      }
      {
        Formula builtBody = body.build();
        std::set<Var> av = allocatedVars(builtBody, assigned);
        std::set<int> headSet;
        for (size_t j = 0; j < r.params.size(); ++j)
          if (av.count(r.params[j])) headSet.insert(static_cast<int>(j + 1));
        PredId headName = allocVariantName(r.head, headSet);
        variantArity[headName] = static_cast<int>(r.params.size());
        candidates.push_back(
            VariantRule{headName, headSet, Rule{headName, r.params, builtBody}});
      }
      // Advance odometer.
      size_t k = predAtomIdx.size();
      bool done = true;
      while (k > 0) {
        const auto& atom = shape.atoms[predAtomIdx[k - 1]].predAtom();
        uint32_t limit = 1u << atom.args.size();
        if (++mask[k - 1] < limit) {
          done = false;
          break;
        }
        mask[k - 1] = 0;
        --k;
      }
      if (done) break;
    }
  }

  // Keep only productive variants: a variant is productive when it has a
  // rule whose body mentions only productive variants.
  std::set<PredId> productive;
  bool grew = true;
  while (grew) {
    grew = false;
    for (const auto& c : candidates) {
      if (productive.count(c.head)) continue;
      bool allProd = true;
      for (const auto& q : predsIn(c.rule.body))
        if (!productive.count(q)) allProd = false;
      if (allProd) {
        productive.insert(c.head);
        grew = true;
      }
    }
  }

  for (const auto& c : candidates) {
    if (!productive.count(c.head)) continue;
    bool allProd = true;
    for (const auto& q : predsIn(c.rule.body))
      if (!productive.count(q)) allProd = false;
    if (!allProd) continue;
    out.rules.push_back(c.rule);
  }

  // Declare arities for surviving variants.
  for (const auto& r : out.rules)
    out.declare(r.head, static_cast<int>(r.params.size()));
  for (const auto& r : out.rules)
    for (const auto& q : predsIn(r.body))
      if (!out.declared(q)) out.declare(q, variantArity.at(q));

  // Replace every predicate atom in the formulas by the disjunction of its
  // productive variants (subset masks ascending); `false` when none survive.
  auto rewriteAtom = [&](const PredAtom& a) -> Formula {
    int n = sq.sid.arity(a.pred);
    std::vector<Formula> variants;
    for (uint32_t m = 0; m < (1u << n); ++m) {
      std::set<int> A;
      for (int b = 0; b < n; ++b)
        if (m & (1u << b)) A.insert(b + 1);
      PredId vname = allocVariantName(a.pred, A);
      if (productive.count(vname)) {
        variants.push_back(Formula::predAtom(vname, a.args));
        if (!out.declared(vname)) out.declare(vname, n);
      }
    }
    return Formula::disjAll(variants);
  };

  Sequent res = sq;
  res.sid = out;
  forEachFormula(res, [&](Formula f) { return mapPredAtoms(f, rewriteAtom); });
  return res;
}

// --- Step 1 -----------------------------------------------------------------

Sequent step1SymbolicHeapsAndParams(const Sequent& sq) {
  Sequent res = sq;
  forEachFormula(res, [](Formula f) {
    return Formula::disjAll(dnfSymbolicHeaps(f));
  });

  std::vector<Var> fvVec = sortedFreeVars(res);
  if (fvVec.empty()) return res;

  SID out;
  out.kappa = res.sid.kappa;
  for (const auto& [p, ar] : res.sid.arities)
    out.declare(extendedName(p), ar + static_cast<int>(fvVec.size()));

  FreshNames fresh;
  for (const auto& r : res.sid.rules) {
    fresh.avoidAllIn(r.body);
    for (const auto& p : r.params) fresh.avoid(p.name());
  }
  for (const auto& v : fvVec) fresh.avoid(v.name());

  for (const auto& r : res.sid.rules) {
    // Per-rule names for the appended parameters: reuse the sequent's
    // variable names unless they clash with the rule's own variables.
    std::set<Var> used = allVars(r.body);
    used.insert(r.params.begin(), r.params.end());
    std::vector<Var> appended;
    for (const auto& v : fvVec) {
      Var w = v;
      if (used.count(w)) w = fresh.fresh(v.name());
      used.insert(w);
      appended.push_back(w);
    }
    std::vector<Var> params = r.params;
    params.insert(params.end(), appended.begin(), appended.end());
    Formula body = mapPredAtoms(r.body, [&](const PredAtom& a) {
      std::vector<Var> args = a.args;
      args.insert(args.end(), appended.begin(), appended.end());
      return Formula::predAtom(extendedName(a.pred), std::move(args));
    });
    out.rules.push_back(Rule{extendedName(r.head), std::move(params), body});
  }

  res.sid = out;
  forEachFormula(res, [&](Formula f) {
    return mapPredAtoms(f, [&](const PredAtom& a) {
      std::vector<Var> args = a.args;
      args.insert(args.end(), fvVec.begin(), fvVec.end());
      return Formula::predAtom(extendedName(a.pred), std::move(args));
    });
  });
  return res;
}

// --- Step 2 -----------------------------------------------------------------

namespace {

// (a) exhaustively eliminate equations involving an existential variable.
Heaplet eliminateBoundEquations(Heaplet h) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t i = 0; i < h.atoms.size(); ++i) {
      const Formula& a = h.atoms[i];
      if (a.kind() != Formula::Kind::TheoryAtom) continue;
      const auto& t = a.theoryAtom();
      if (t.sym != TheorySym::Eq) continue;
      Var x = t.args[0], y = t.args[1];
      bool xBound =
          std::find(h.prefix.begin(), h.prefix.end(), x) != h.prefix.end();
      bool yBound =
          std::find(h.prefix.begin(), h.prefix.end(), y) != h.prefix.end();
      if (x == y) {
        if (xBound) {  // EX x . x = x * phi: trivially true equation
          h.atoms.erase(h.atoms.begin() + i);
          changed = true;
          break;
        }
        continue;  // free trivial equation: handled in step 3
      }
      if (!xBound && !yBound) continue;
      if (!xBound) std::swap(x, y);  // substitute the bound one away
      Substitution sigma = Substitution::single(x, y);
      h.atoms.erase(h.atoms.begin() + i);
      for (auto& g : h.atoms) {
        FreshNames none;
        g = applySubst(g, sigma, &none);  // matrix has no binders
      }
      h.prefix.erase(std::find(h.prefix.begin(), h.prefix.end(), x));
      changed = true;
      break;
    }
  }
  return h;
}

// (b) all idempotent substitutions mapping each existential to itself, to an
// earlier surviving existential or to a free variable. Choice vectors are
// enumerated with the first existential varying fastest.
std::vector<Substitution> idempotentMerges(const std::vector<Var>& bound,
                                           const std::vector<Var>& frees) {
  std::vector<Substitution> out;
  size_t k = bound.size();
  // Choice c[i]: 0 = keep; 1..i = merge into bound[c-1]; i+1.. = free var.
  std::vector<size_t> c(k, 0);
  while (true) {
    bool valid = true;
    Substitution sigma;
    for (size_t i = 0; i < k && valid; ++i) {
      if (c[i] == 0) continue;
      if (c[i] <= i) {
        size_t j = c[i] - 1;
        if (c[j] != 0) valid = false;  // representative must stay
        sigma.set(bound[i], bound[j]);
      } else {
        sigma.set(bound[i], frees[c[i] - 1 - i]);
      }
    }
    if (valid) out.push_back(sigma);
    size_t i = 0;
    for (; i < k; ++i) {
      size_t limit = 1 + i + frees.size();
      if (++c[i] < limit) break;
      c[i] = 0;
    }
    if (i == k) break;
  }
  return out;
}

std::vector<Heaplet> step2Heaplet(const Heaplet& input,
                                  const std::vector<Var>& frees) {
  Heaplet h = eliminateBoundEquations(input);
  std::vector<Heaplet> out;
  std::vector<Substitution> sigmas = idempotentMerges(h.prefix, frees);
  // Drop duplicate sigma results (k == 0 pushes exactly one).
  for (const auto& sigma : sigmas) {
    Heaplet d;
    auto dom = sigma.domain();
    for (const auto& z : h.prefix)
      if (!dom.count(z)) d.prefix.push_back(z);
    for (const auto& a : h.atoms) {
      FreshNames none;
      d.atoms.push_back(applySubst(a, sigma, &none));
    }
    // Disequation saturation over the surviving existentials.
    for (size_t i = 0; i < d.prefix.size(); ++i) {
      for (size_t j = i + 1; j < d.prefix.size(); ++j)
        d.atoms.push_back(Formula::theoryAtom(
            TheorySym::Neq, {d.prefix[i], d.prefix[j]}));
      for (const auto& f : frees)
        d.atoms.push_back(
            Formula::theoryAtom(TheorySym::Neq, {d.prefix[i], f}));
    }
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace

Sequent step2InstantiateExistentials(const Sequent& sq) {
  Sequent res = sq;
  forEachFormula(res, [](Formula f) {
    std::vector<Formula> disjuncts;
    for (const auto& heap : dnfSymbolicHeaps(f)) {
      Heaplet h = takeApart(heap);
      auto fv = freeVars(heap);
      std::vector<Var> frees(fv.begin(), fv.end());
      for (auto& d : step2Heaplet(h, frees)) disjuncts.push_back(d.build());
    }
    return Formula::disjAll(disjuncts);
  });

  SID out;
  out.kappa = res.sid.kappa;
  out.arities = res.sid.arities;
  for (const auto& r : res.sid.rules) {
    Heaplet h = takeApart(r.body);
    for (auto& d : step2Heaplet(h, r.params))
      out.rules.push_back(Rule{r.head, r.params, d.build()});
  }
  res.sid = out;
  return res;
}

// --- Step 3 -----------------------------------------------------------------

namespace {

// pattern[i] = first position (1-based) holding the same variable.
std::vector<int> argPattern(const std::vector<Var>& args) {
  std::vector<int> pattern(args.size());
  for (size_t i = 0; i < args.size(); ++i) {
    size_t first = i;
    for (size_t j = 0; j < i; ++j)
      if (args[j] == args[i]) {
        first = j;
        break;
      }
    pattern[i] = static_cast<int>(first + 1);
  }
  return pattern;
}

bool isIdentityPattern(const std::vector<int>& pattern) {
  for (size_t i = 0; i < pattern.size(); ++i)
    if (pattern[i] != static_cast<int>(i + 1)) return false;
  return true;
}

struct CollapseState {
  SID sid;
  // (base predicate, pattern) -> variant name, for variants already built.
  std::map<std::pair<PredId, std::vector<int>>, PredId> memo;
};

// Rewrites one repeated-argument atom; generates the variant's rules from
// the current rules of the base predicate on first use.
Formula collapseAtom(const PredAtom& a, CollapseState& st) {
  std::vector<int> pattern = argPattern(a.args);
  assert(!isIdentityPattern(pattern));
  std::vector<size_t> kept;
  for (size_t i = 0; i < pattern.size(); ++i)
    if (pattern[i] == static_cast<int>(i + 1)) kept.push_back(i);
  auto key = std::make_pair(a.pred, pattern);
  auto it = st.memo.find(key);
  PredId vname;
  if (it != st.memo.end()) {
    vname = it->second;
  } else {
    vname = mergeVariantName(a.pred, pattern);
    st.memo[key] = vname;
    st.sid.declare(vname, static_cast<int>(kept.size()));
    std::vector<Rule> base;
    for (const auto& r : st.sid.rules)
      if (r.head == a.pred) base.push_back(r);
    for (const auto& r : base) {
      std::vector<Var> params;
      for (size_t i : kept) params.push_back(r.params[i]);
      Substitution theta;
      for (size_t i = 0; i < pattern.size(); ++i)
        theta.set(r.params[i], r.params[pattern[i] - 1]);
      FreshNames fresh;
      fresh.avoidAllIn(r.body);
      Formula body = applySubst(r.body, theta, &fresh);
      st.sid.rules.push_back(Rule{vname, std::move(params), std::move(body)});
    }
  }
  std::vector<Var> args;
  for (size_t i : kept) args.push_back(a.args[i]);
  return Formula::predAtom(vname, std::move(args));
}

Formula collapseAll(const Formula& f, CollapseState& st) {
  return mapPredAtoms(f, [&](const PredAtom& a) -> Formula {
    if (isIdentityPattern(argPattern(a.args)))
      return Formula::predAtom(a.pred, a.args);
    return collapseAtom(a, st);
  });
}

}  // namespace

Sequent step3CollapseRepeatedArgs(const Sequent& sq) {
  CollapseState st;
  st.sid = sq.sid;
  Sequent res = sq;

  forEachFormula(res, [&](Formula f) { return collapseAll(f, st); });
  // Rule bodies, including freshly generated variant rules (the rule vector
  // grows while we scan it, so copy each body out before collapsing).
  for (size_t i = 0; i < st.sid.rules.size(); ++i) {
    Formula body = st.sid.rules[i].body;
    body = collapseAll(body, st);
    st.sid.rules[i].body = body;
  }

  // Equation removal. Rules with an equation between distinct variables are
  // unsatisfiable in every context the atoms can appear in (existentials are
  // saturated with disequations, stores are injective on free variables).
  SID cleaned;
  cleaned.kappa = st.sid.kappa;
  cleaned.arities = st.sid.arities;
  for (const auto& r : st.sid.rules) {
    Heaplet h = takeApart(r.body);
    bool dead = false;
    std::vector<Formula> atoms;
    for (const auto& a : h.atoms) {
      if (a.kind() == Formula::Kind::TheoryAtom &&
          a.theoryAtom().sym == TheorySym::Eq) {
        if (a.theoryAtom().args[0] == a.theoryAtom().args[1]) continue;
        dead = true;
        break;
      }
      atoms.push_back(a);
    }
    if (dead) continue;
    h.atoms = std::move(atoms);
    cleaned.rules.push_back(Rule{r.head, r.params, h.build()});
  }
  res.sid = cleaned;

  forEachFormula(res, [&](Formula f) {
    std::vector<Formula> disjuncts;
    for (const auto& heap : dnfSymbolicHeaps(f)) {
      Heaplet h = takeApart(heap);
      bool dead = false;
      std::vector<Formula> atoms;
      for (const auto& a : h.atoms) {
        if (a.kind() == Formula::Kind::TheoryAtom &&
            a.theoryAtom().sym == TheorySym::Eq) {
          if (a.theoryAtom().args[0] == a.theoryAtom().args[1]) continue;
          dead = true;  // distinct free variables, injective store
          break;
        }
        atoms.push_back(a);
      }
      if (dead) continue;
      h.atoms = std::move(atoms);
      disjuncts.push_back(h.build());
    }
    return Formula::disjAll(disjuncts);
  });
  return res;
}

// --- Step 4 -----------------------------------------------------------------

Sequent step4AllocateFreeVars(const Sequent& sq) {
  auto amr = computeAllocMap(sq.sid);
  if (!amr.compatible)
    throw MissingAllocMapError(
        "step4AllocateFreeVars: SID is not alloc-compatible (predicate '" +
        amr.witness + "')");

  Sequent res = sq;
  forEachFormula(res, [](Formula f) {
    return Formula::disjAll(dnfSymbolicHeaps(f));
  });

  FreshNames fresh;
  std::set<Var> usedEverywhere;
  auto noteAll = [&](const Formula& f) {
    for (const auto& v : allVars(f)) {
      usedEverywhere.insert(v);
      fresh.avoid(v.name());
    }
  };
  noteAll(res.lhs);
  for (const auto& g : res.rhs) noteAll(g);
  for (const auto& r : res.sid.rules) {
    noteAll(r.body);
    for (const auto& p : r.params) {
      usedEverywhere.insert(p);
      fresh.avoid(p.name());
    }
  }

  Var sink = usedEverywhere.count(Var("u")) ? fresh.fresh("u") : Var("u");

  // Per-disjunct allocation sets under the pre-extension alloc map.
  std::vector<std::vector<std::set<Var>>> allocSets;  // [0]=lhs, then rhs
  auto collectAlloc = [&](const Formula& f) {
    std::vector<std::set<Var>> sets;
    for (const auto& heap : dnfSymbolicHeaps(f))
      sets.push_back(allocatedVars(heap, amr.alloc));
    return sets;
  };
  allocSets.push_back(collectAlloc(res.lhs));
  for (const auto& g : res.rhs) allocSets.push_back(collectAlloc(g));

  // kappa extension: the sink variable is appended to every points-to tuple
  // and every predicate's parameter list.
  res.sid.kappa += 1;
  SID extended;
  extended.kappa = res.sid.kappa;
  for (const auto& [p, ar] : res.sid.arities) extended.declare(p, ar + 1);
  for (const auto& r : res.sid.rules) {
    std::set<Var> used = allVars(r.body);
    used.insert(r.params.begin(), r.params.end());
    Var w = used.count(sink) ? fresh.fresh(sink.name()) : sink;
    std::vector<Var> params = r.params;
    params.push_back(w);
    Formula body = mapAtoms(r.body, [&](const Formula& a) {
      if (a.kind() == Formula::Kind::PointsTo) {
        auto pts = a.pointsTo();
        pts.targets.push_back(w);
        return Formula::pointsTo(pts.source, pts.targets);
      }
      if (a.kind() == Formula::Kind::PredAtom) {
        auto pa = a.predAtom();
        pa.args.push_back(w);
        return Formula::predAtom(pa.pred, pa.args);
      }
      return a;
    });
    extended.rules.push_back(Rule{r.head, std::move(params), body});
  }
  res.sid = extended;

  auto extendFormula = [&](const Formula& f) {
    return mapAtoms(f, [&](const Formula& a) {
      if (a.kind() == Formula::Kind::PointsTo) {
        auto pts = a.pointsTo();
        pts.targets.push_back(sink);
        return Formula::pointsTo(pts.source, pts.targets);
      }
      if (a.kind() == Formula::Kind::PredAtom) {
        auto pa = a.predAtom();
        pa.args.push_back(sink);
        return Formula::predAtom(pa.pred, pa.args);
      }
      return a;
    });
  };
  res.lhs = extendFormula(res.lhs);
  for (auto& g : res.rhs) g = extendFormula(g);

  // u': alphabetically first free variable distinct from the sink; added
  // fresh when the sequent has no other free variable.
  std::set<Var> fvAll = freeVars(res);
  fvAll.insert(sink);
  Var uprime;
  bool haveUPrime = false;
  for (const auto& v : fvAll)
    if (v != sink) {
      uprime = v;
      haveUPrime = true;
      break;
    }
  if (!haveUPrime) uprime = usedEverywhere.count(Var("up")) ? fresh.fresh("up") : Var("up");

  // Allocate every free variable that a disjunct leaves unallocated.
  size_t seqIdx = 0;
  auto addCells = [&](const Formula& f) {
    const auto& sets = allocSets[seqIdx];
    std::vector<Formula> disjuncts;
    auto heaps = dnfSymbolicHeaps(f);
    for (size_t i = 0; i < heaps.size(); ++i) {
      Heaplet h = takeApart(heaps[i]);
      std::vector<Var> missing;
      for (const auto& v : fvAll)
        if (!sets[i].count(v)) missing.push_back(v);
      for (const auto& v : missing)
        h.atoms.push_back(Formula::pointsTo(
            v, std::vector<Var>(static_cast<size_t>(res.sid.kappa), uprime)));
      disjuncts.push_back(h.build());
    }
    ++seqIdx;
    return Formula::disjAll(disjuncts);
  };
  res.lhs = addCells(res.lhs);
  for (auto& g : res.rhs) g = addCells(g);

  // Finally erase all disequations.
  auto dropNeq = [&](const Formula& f) {
    Heaplet h = takeApart(f);
    std::vector<Formula> atoms;
    for (const auto& a : h.atoms)
      if (!(a.kind() == Formula::Kind::TheoryAtom &&
            a.theoryAtom().sym == TheorySym::Neq))
        atoms.push_back(a);
    h.atoms = std::move(atoms);
    return h.build();
  };
  forEachFormula(res, [&](Formula f) {
    std::vector<Formula> disjuncts;
    for (const auto& heap : dnfSymbolicHeaps(f))
      disjuncts.push_back(dropNeq(heap));
    return Formula::disjAll(disjuncts);
  });
  SID noNeq;
  noNeq.kappa = res.sid.kappa;
  noNeq.arities = res.sid.arities;
  for (const auto& r : res.sid.rules)
    noNeq.rules.push_back(Rule{r.head, r.params, dropNeq(r.body)});
  res.sid = noNeq;
  return res;
}

// --- pipeline -----------------------------------------------------------------

std::pair<Sequent, PipelineTrace> eliminateEqualities(const Sequent& sq) {
  requirePc(sq, "eliminateEqualities");
  requireEstablished(sq, "eliminateEqualities");

  // Binder hygiene up front; every later step assumes distinct binders.
  Sequent input = sq;
  FreshNames session;
  auto avoidAll = [&](const Formula& f) {
    for (const auto& v : allVars(f)) session.avoid(v.name());
  };
  avoidAll(input.lhs);
  for (const auto& g : input.rhs) avoidAll(g);
  for (const auto& r : input.sid.rules) avoidAll(r.body);
  forEachFormula(input,
                 [&](Formula f) { return normalizeBinders(f, session); });
  for (auto& r : input.sid.rules)
    r.body = normalizeBinders(r.body, session);

  PipelineTrace trace;
  auto snap = [&trace](const std::string& label, const Sequent& s) {
    trace.snapshots.push_back(
        PipelineTrace::Snapshot{label, s, width(s), size(s)});
  };

  Sequent s1 = step1SymbolicHeapsAndParams(input);
  snap("step1", s1);
  Sequent s2 = step2InstantiateExistentials(s1);
  snap("step2", s2);
  Sequent s3 = step3CollapseRepeatedArgs(s2);
  snap("step3", s3);
  Sequent ac = makeAllocCompatible(s3);
  snap("alloc-compat", ac);
  Sequent s4 = step4AllocateFreeVars(ac);
  snap("step4", s4);
  return {s4, trace};
}

Sequent pruneUnreachable(const Sequent& sq) {
  std::set<PredId> roots = predsIn(sq.lhs);
  for (const auto& g : sq.rhs) {
    auto more = predsIn(g);
    roots.insert(more.begin(), more.end());
  }
  auto dep = dependsOn(sq.sid);
  std::set<PredId> keep;
  for (const auto& p : roots) {
    keep.insert(p);
    auto it = dep.find(p);
    if (it != dep.end()) keep.insert(it->second.begin(), it->second.end());
  }
  Sequent res = sq;
  SID out;
  out.kappa = sq.sid.kappa;
  for (const auto& r : sq.sid.rules)
    if (keep.count(r.head)) out.rules.push_back(r);
  for (const auto& [p, ar] : sq.sid.arities)
    if (keep.count(p)) out.declare(p, ar);
  res.sid = out;
  return res;
}

}  // namespace slkit
