#include "slkit/conditions.hpp"

#include <algorithm>

#include "slkit/parser.hpp"

namespace slkit {

namespace {

// Minimal union-find over variables, used for equation closure.
class VarUnion {
public:
  const Var& find(const Var& v) {
    auto it = parent_.find(v);
    if (it == parent_.end() || it->second == v) {
      parent_[v] = v;
      return parent_.find(v)->first;
    }
    Var root = find(it->second);
    parent_[v] = root;
    return parent_.find(v)->second;
  }
  void unite(const Var& a, const Var& b) {
    Var ra = find(a), rb = find(b);
    if (!(ra == rb)) parent_[ra] = rb;
  }
  bool same(const Var& a, const Var& b) { return find(a) == find(b); }

private:
  std::map<Var, Var> parent_;
};

void flattenStar(const Formula& f, std::vector<Formula>& atoms, bool& ok) {
  switch (f.kind()) {
    case Formula::Kind::Star:
      flattenStar(f.left(), atoms, ok);
      flattenStar(f.right(), atoms, ok);
      return;
    case Formula::Kind::Or:
    case Formula::Kind::Exists:
      ok = false;
      return;
    default:
      atoms.push_back(f);
      return;
  }
}

// Variables allocated in a decomposed body under the position map `est`,
// closed under the body's equations.
std::set<Var> allocatedInBody(const BodyShape& shape,
                              const std::map<PredId, std::set<int>>& est) {
  VarUnion uf;
  std::set<Var> roots;
  for (const auto& a : shape.atoms) {
    if (a.kind() == Formula::Kind::PointsTo) roots.insert(a.pointsTo().source);
    if (a.kind() == Formula::Kind::PredAtom) {
      const auto& p = a.predAtom();
      auto it = est.find(p.pred);
      if (it == est.end()) continue;
      for (int pos : it->second)
        if (pos >= 1 && pos <= static_cast<int>(p.args.size()))
          roots.insert(p.args[pos - 1]);
    }
    if (a.kind() == Formula::Kind::TheoryAtom &&
        a.theoryAtom().sym == TheorySym::Eq)
      uf.unite(a.theoryAtom().args[0], a.theoryAtom().args[1]);
  }
  // Close: any variable whose class contains a root.
  std::set<Var> all;
  for (const auto& a : shape.atoms) {
    auto fv = freeVars(a);
    all.insert(fv.begin(), fv.end());
  }
  std::set<Var> out;
  for (const auto& v : all)
    for (const auto& r : roots)
      if (uf.same(v, r)) {
        out.insert(v);
        break;
      }
  return out;
}

}  // namespace

BodyShape decomposeBody(const Formula& body) {
  BodyShape shape;
  Formula cur = body;
  while (cur.kind() == Formula::Kind::Exists) {
    shape.existentials.push_back(cur.bound());
    cur = cur.body();
  }
  flattenStar(cur, shape.atoms, shape.wellShaped);
  return shape;
}

std::string ruleId(const SID& sid, size_t index) {
  return sid.rules[index].head + "/" + std::to_string(index);
}

ConditionReport checkProgress(const SID& sid) {
  ConditionReport rep;
  for (size_t i = 0; i < sid.rules.size(); ++i) {
    const Rule& r = sid.rules[i];
    BodyShape shape = decomposeBody(r.body);
    if (!shape.wellShaped) {
      rep.add(ruleId(sid, i), "body is not a symbolic heap",
              printFormula(r.body));
      continue;
    }
    std::vector<const PointsTo*> pts;
    for (const auto& a : shape.atoms)
      if (a.kind() == Formula::Kind::PointsTo) pts.push_back(&a.pointsTo());
    if (pts.size() != 1) {
      rep.add(ruleId(sid, i),
              "body must contain exactly one points-to atom (found " +
                  std::to_string(pts.size()) + ")",
              printFormula(r.body));
      continue;
    }
    if (r.params.empty() || !(pts[0]->source == r.params[0]))
      rep.add(ruleId(sid, i),
              "points-to atom is not rooted at the first parameter",
              pts[0]->source.name() + " -> (...)");
  }
  return rep;
}

ConditionReport checkConnectivity(const SID& sid) {
  ConditionReport rep;
  for (size_t i = 0; i < sid.rules.size(); ++i) {
    const Rule& r = sid.rules[i];
    BodyShape shape = decomposeBody(r.body);
    if (!shape.wellShaped) continue;  // reported by checkProgress
    const PointsTo* pts = nullptr;
    for (const auto& a : shape.atoms)
      if (a.kind() == Formula::Kind::PointsTo) pts = &a.pointsTo();
    if (!pts) continue;
    for (const auto& a : shape.atoms) {
      if (a.kind() != Formula::Kind::PredAtom) continue;
      const auto& p = a.predAtom();
      if (p.args.empty()) {
        rep.add(ruleId(sid, i), "nullary predicate atom cannot be connected",
                printFormula(a));
        continue;
      }
      bool found = std::find(pts->targets.begin(), pts->targets.end(),
                             p.args[0]) != pts->targets.end();
      if (!found)
        rep.add(ruleId(sid, i),
                "first argument of " + p.pred +
                    " is not a points-to target of the body",
                printFormula(a));
    }
  }
  return rep;
}

std::map<PredId, std::set<int>> establishedPositions(const SID& sid) {
  std::map<PredId, std::set<int>> est;
  for (const auto& [p, ar] : sid.arities) {
    std::set<int> full;
    for (int i = 1; i <= ar; ++i) full.insert(i);
    est[p] = full;  // predicates without rules keep the full set (vacuous)
  }
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& r : sid.rules) {
      BodyShape shape = decomposeBody(r.body);
      if (!shape.wellShaped) continue;
      std::set<Var> allocated = allocatedInBody(shape, est);
      std::set<int> positions;
      for (size_t j = 0; j < r.params.size(); ++j)
        if (allocated.count(r.params[j]))
          positions.insert(static_cast<int>(j + 1));
      std::set<int> inter;
      auto& cur = est[r.head];
      std::set_intersection(cur.begin(), cur.end(), positions.begin(),
                            positions.end(),
                            std::inserter(inter, inter.begin()));
      if (inter != cur) {
        cur = std::move(inter);
        changed = true;
      }
    }
  }
  return est;
}

ConditionReport checkEstablishment(const SID& sid) {
  ConditionReport rep;
  auto est = establishedPositions(sid);
  for (size_t i = 0; i < sid.rules.size(); ++i) {
    const Rule& r = sid.rules[i];
    BodyShape shape = decomposeBody(r.body);
    if (!shape.wellShaped) continue;
    std::set<Var> allocated = allocatedInBody(shape, est);
    for (const auto& x : shape.existentials)
      if (!allocated.count(x))
        rep.add(ruleId(sid, i),
                "existential variable '" + x.name() +
                    "' is not allocated in every unfolding",
                printFormula(r.body));
  }
  return rep;
}

namespace {

std::set<Var> allocInShape(const BodyShape& shape, const AllocMap& alloc) {
  std::set<Var> out;
  for (const auto& a : shape.atoms) {
    if (a.kind() == Formula::Kind::PointsTo) out.insert(a.pointsTo().source);
    if (a.kind() == Formula::Kind::PredAtom) {
      const auto& p = a.predAtom();
      auto it = alloc.find(p.pred);
      if (it == alloc.end()) continue;
      for (int pos : it->second)
        if (pos >= 1 && pos <= static_cast<int>(p.args.size()))
          out.insert(p.args[pos - 1]);
    }
  }
  return out;
}

std::set<int> rulePositions(const Rule& r, const AllocMap& alloc) {
  BodyShape shape = decomposeBody(r.body);
  std::set<Var> vars = allocInShape(shape, alloc);
  std::set<int> out;
  for (size_t j = 0; j < r.params.size(); ++j)
    if (vars.count(r.params[j])) out.insert(static_cast<int>(j + 1));
  return out;
}

// One monotone pass; works for both the lfp (from bottom) and the
// gfp-style fallback (from top).
bool iterate(const SID& sid, AllocMap& alloc) {
  bool changed = true;
  while (changed) {
    changed = false;
    std::map<PredId, std::set<int>> next;
    for (const auto& r : sid.rules) {
      auto pos = rulePositions(r, alloc);
      next[r.head].insert(pos.begin(), pos.end());
    }
    for (auto& [p, s] : next) {
      if (alloc[p] != s) {
        alloc[p] = s;
        changed = true;
      }
    }
  }
  return true;
}

}  // namespace

bool verifyAllocMap(const SID& sid, const AllocMap& alloc) {
  for (const auto& r : sid.rules) {
    auto pos = rulePositions(r, alloc);
    auto it = alloc.find(r.head);
    std::set<int> head = it == alloc.end() ? std::set<int>{} : it->second;
    if (pos != head) return false;
  }
  return true;
}

AllocMapResult computeAllocMap(const SID& sid) {
  AllocMapResult res;
  AllocMap lfp;
  for (const auto& [p, ar] : sid.arities) lfp[p] = {};
  iterate(sid, lfp);
  if (verifyAllocMap(sid, lfp)) {
    res.compatible = true;
    res.alloc = std::move(lfp);
    return res;
  }
  // Fallback from the top, for maps the bottom-up pass undershoots.
  AllocMap gfp;
  for (const auto& [p, ar] : sid.arities) {
    std::set<int> full;
    if (!sid.rulesFor(p).empty())
      for (int i = 1; i <= ar; ++i) full.insert(i);
    gfp[p] = full;
  }
  iterate(sid, gfp);
  if (verifyAllocMap(sid, gfp)) {
    res.compatible = true;
    res.alloc = std::move(gfp);
    return res;
  }
  for (const auto& r : sid.rules) {
    if (rulePositions(r, lfp) != lfp[r.head]) {
      res.witness = r.head;
      break;
    }
  }
  res.compatible = false;
  return res;
}

std::set<Var> allocatedVars(const Formula& f, const AllocMap& alloc) {
  BodyShape shape = decomposeBody(f);
  std::set<Var> vars = allocInShape(shape, alloc);
  // Only free variables count.
  std::set<Var> bound(shape.existentials.begin(), shape.existentials.end());
  std::set<Var> out;
  for (const auto& v : vars)
    if (!bound.count(v)) out.insert(v);
  return out;
}

std::set<TheorySym> reachableTheorySyms(const Sequent& sq) {
  std::set<TheorySym> syms = theorySymsIn(sq.lhs);
  std::set<PredId> preds = predsIn(sq.lhs);
  for (const auto& g : sq.rhs) {
    auto s2 = theorySymsIn(g);
    syms.insert(s2.begin(), s2.end());
    auto p2 = predsIn(g);
    preds.insert(p2.begin(), p2.end());
  }
  auto dep = dependsOn(sq.sid);
  std::set<PredId> reach;
  for (const auto& p : preds) {
    reach.insert(p);
    auto it = dep.find(p);
    if (it != dep.end()) reach.insert(it->second.begin(), it->second.end());
  }
  for (const auto& r : sq.sid.rules) {
    if (!reach.count(r.head)) continue;
    auto s2 = theorySymsIn(r.body);
    syms.insert(s2.begin(), s2.end());
  }
  return syms;
}

ConditionReport checkConstrained(const Sequent& sq,
                                 const std::set<TheorySym>& P) {
  ConditionReport rep;
  for (const auto& sym : reachableTheorySyms(sq))
    if (!P.count(sym))
      rep.add("<sequent>",
              std::string("theory predicate '") + theorySymName(sym) +
                  "' is reachable but not in P",
              theorySymName(sym));
  return rep;
}

}  // namespace slkit
