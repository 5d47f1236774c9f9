#include "slkit/pcp.hpp"

#include <algorithm>
#include <set>

namespace slkit {

void PcpInstance::validate() const {
  if (u.empty() || u.size() != v.size())
    throw InstanceInvariantError(
        "instance needs equally many u- and v-words, at least one pair");
  for (const auto& w : u)
    if (w.size() < 2)
      throw InstanceInvariantError("every u-word needs length >= 2");
  for (const auto& w : v)
    if (w.size() < 2)
      throw InstanceInvariantError("every v-word needs length >= 2");
}

int PcpInstance::maxWordLength() const {
  size_t m = 0;
  for (const auto& w : u) m = std::max(m, w.size());
  for (const auto& w : v) m = std::max(m, w.size());
  return static_cast<int>(m);
}

std::vector<Position> allPositions(const PcpInstance& inst) {
  std::vector<Position> out;
  int m = inst.maxWordLength();
  for (int i = 1; i <= inst.tiles(); ++i)
    for (int j = 1; j <= m; ++j) out.push_back(Position{i, j});
  return out;
}

bool inB(const Position& p) { return p.offset == 1; }

bool inE(const PcpInstance& inst, Side w, const Position& p) {
  const auto& words = w == Side::U ? inst.u : inst.v;
  if (p.tile < 1 || p.tile > inst.tiles()) return false;
  return p.offset == static_cast<int>(words[p.tile - 1].size());
}

std::optional<char> wordChar(const PcpInstance& inst, Side w,
                             const Position& p) {
  const auto& words = w == Side::U ? inst.u : inst.v;
  if (p.tile < 1 || p.tile > inst.tiles()) return std::nullopt;
  const std::string& word = words[p.tile - 1];
  if (p.offset < 1 || p.offset > static_cast<int>(word.size()))
    return std::nullopt;
  return word[p.offset - 1];
}

bool matchRelation(const PcpInstance& inst, const Position& p,
                   const Position& q) {
  auto a = wordChar(inst, Side::U, p);
  auto b = wordChar(inst, Side::V, q);
  return a && b && *a == *b;
}

std::vector<Position> successorRelation(const PcpInstance& inst, Side w,
                                        const Position& p) {
  if (p.tile < 1 || p.tile > inst.tiles() || p.offset < 1 ||
      p.offset > inst.maxWordLength())
    throw OffsetOutOfRangeError("position (" + std::to_string(p.tile) + "," +
                                std::to_string(p.offset) +
                                ") lies outside P");
  const auto& words = w == Side::U ? inst.u : inst.v;
  int len = static_cast<int>(words[p.tile - 1].size());
  std::vector<Position> out;
  if (p.offset < len) {
    out.push_back(Position{p.tile, p.offset + 1});
  } else if (p.offset == len) {
    for (int i = 1; i <= inst.tiles(); ++i) out.push_back(Position{i, 1});
  }
  return out;
}

Var positionVar(const Position& p) {
  return Var("p_" + std::to_string(p.tile) + "_" + std::to_string(p.offset));
}

namespace {

std::string posTag(const Position& p) {
  return std::to_string(p.tile) + "_" + std::to_string(p.offset);
}

PredId wName(const Position& p, const Position& q) {
  return "W_" + posTag(p) + "_" + posTag(q);
}
PredId bName(int a, int b) {
  return "B_" + std::to_string(a) + "_" + std::to_string(b);
}
PredId cName(const Position& p, const Position& q, int a, int b) {
  return "C_" + posTag(p) + "_" + posTag(q) + "_" + std::to_string(a) + "_" +
         std::to_string(b);
}

struct Builder {
  const PcpInstance& inst;
  TheoryId theory;
  std::vector<Position> positions;
  Var x{"x"}, nil{"nil"};
  std::vector<Var> vvec;  // position vars then nil
  std::vector<Var> wvec;  // vvec,y,y',z,z',u,u'
  std::vector<Var> uvec;  // vvec,y,z,u
  SID sid;

  Var y{"y"}, yp{"yp"}, z{"z"}, zp{"zp"}, u{"u"}, up{"up"};
  Var xp{"xp"}, ypp{"ypp"}, zpp{"zpp"}, upp{"upp"};

  explicit Builder(const PcpInstance& i, TheoryId t) : inst(i), theory(t) {
    positions = allPositions(inst);
    for (const auto& p : positions) vvec.push_back(positionVar(p));
    vvec.push_back(nil);
    wvec = vvec;
    for (const auto& v : {y, yp, z, zp, u, up}) wvec.push_back(v);
    uvec = vvec;
    for (const auto& v : {y, z, u}) uvec.push_back(v);
    sid.kappa = 6;
  }

  std::vector<Var> withHead(const Var& head, const std::vector<Var>& rest) {
    std::vector<Var> args{head};
    args.insert(args.end(), rest.begin(), rest.end());
    return args;
  }

  Formula pts(const Var& src, std::vector<Var> targets) {
    return Formula::pointsTo(src, std::move(targets));
  }
  Formula pcell(const Var& a, const Var& b) {
    return Formula::predAtom("P", {a, b});
  }
  // phi'(a,b,c) = P(a,nil) * P(b,nil) * P(c,nil)
  std::vector<Formula> markers(const Var& a, const Var& b, const Var& c) {
    return {pcell(a, nil), pcell(b, nil), pcell(c, nil)};
  }
  Formula satom(TheorySym s, const Var& a, const Var& b) {
    return Formula::theoryAtom(s, {a, b});
  }

  void addRule(const PredId& head, const std::vector<Var>& params,
               const std::vector<Var>& exs, std::vector<Formula> conj) {
    Formula body = Formula::existsAll(exs, Formula::starAll(conj));
    sid.rules.push_back(Rule{head, params, body});
  }

  void declareFamilies() {
    int arV = 1 + static_cast<int>(vvec.size());
    sid.declare("W", arV);
    for (const auto& p : positions)
      for (const auto& q : positions) sid.declare(wName(p, q), arV);
    sid.declare("P", 2);
    sid.declare("A", arV);
    sid.declare("Ap", arV);
    int arW = 1 + static_cast<int>(wvec.size());
    sid.declare("B", arW);
    for (int a = 0; a <= 2; ++a)
      for (int b = 0; b <= 2; ++b) sid.declare(bName(a, b), arW);
    sid.declare("C", arV);
    int arU = 1 + static_cast<int>(uvec.size());
    for (const auto& p : positions)
      for (const auto& q : positions)
        if (inB(p) && inB(q) && !(p == q))
          for (int a = 0; a <= 1; ++a)
            for (int b = 0; b <= 1; ++b) sid.declare(cName(p, q, a, b), arU);
  }

  void buildW() {
    std::vector<Var> nil5{nil, nil, nil, nil, nil};
    for (const auto& p : positions) {
      if (!inB(p)) continue;
      std::vector<Var> t = nil5;
      t.push_back(xp);
      addRule("W", withHead(x, vvec), {xp},
              {pts(x, t), Formula::predAtom(wName(p, p), withHead(xp, vvec))});
    }
    for (const auto& p : positions) {
      for (const auto& q : positions) {
        if (!matchRelation(inst, p, q)) continue;
        for (const auto& pn : successorRelation(inst, Side::U, p)) {
          for (const auto& qn : successorRelation(inst, Side::V, q)) {
            std::vector<Formula> conj{
                pts(x, {positionVar(p), positionVar(q), y, z, u, xp}),
                Formula::predAtom(wName(pn, qn), withHead(xp, vvec))};
            auto m = markers(y, z, u);
            conj.insert(conj.end(), m.begin(), m.end());
            addRule(wName(p, q), withHead(x, vvec), {xp, y, z, u}, conj);
          }
        }
      }
    }
    for (int i = 1; i <= inst.tiles(); ++i) {
      Position p{i, static_cast<int>(inst.u[i - 1].size())};
      Position q{i, static_cast<int>(inst.v[i - 1].size())};
      if (!matchRelation(inst, p, q)) continue;
      std::vector<Formula> conj{
          pts(x, {positionVar(p), positionVar(q), y, z, u, nil})};
      auto m = markers(y, z, u);
      conj.insert(conj.end(), m.begin(), m.end());
      addRule(wName(p, q), withHead(x, vvec), {y, z, u}, conj);
    }
    addRule("P", {x, y}, {}, {pts(x, {y, y, y, y, y, y})});
  }

  void buildA() {
    std::vector<Var> t{nil, nil, nil, nil, nil, xp};
    addRule("A", withHead(x, vvec), {xp},
            {pts(x, t), Formula::predAtom("Ap", withHead(xp, vvec))});
    // The faulty first index: some cell whose markers violate the S/Sbar
    // pattern, with an arbitrary W tail. Disjunctive side split into two
    // rules.
    for (const auto& p : positions) {
      for (const auto& q : positions) {
        for (const auto& pn : positions) {
          for (const auto& qn : positions) {
            for (TheorySym s : {TheorySym::Sbar, TheorySym::S}) {
              std::vector<Formula> conj{
                  pts(x, {positionVar(p), positionVar(q), y, z, u, xp}),
                  Formula::predAtom(wName(pn, qn), withHead(xp, vvec))};
              auto m = markers(y, z, u);
              conj.insert(conj.end(), m.begin(), m.end());
              conj.push_back(s == TheorySym::Sbar ? satom(s, y, z)
                                                  : satom(s, u, z));
              addRule("Ap", withHead(x, vvec), {xp, y, z, u}, conj);
            }
          }
        }
      }
    }
  }

  void buildB() {
    std::vector<Var> nil5{nil, nil, nil, nil, nil};
    // Entry: the breaking pattern holds at the current index and fails at
    // the next one (two rules for the disjunction).
    for (TheorySym s : {TheorySym::Sbar, TheorySym::S}) {
      std::vector<Var> t = nil5;
      t.push_back(xp);
      std::vector<Formula> conj{
          pts(x, t), Formula::predAtom(bName(0, 0), withHead(xp, wvec)),
          satom(TheorySym::S, y, z), satom(TheorySym::Sbar, u, z)};
      conj.push_back(s == TheorySym::Sbar ? satom(s, yp, zp)
                                          : satom(s, up, zp));
      addRule("B", withHead(x, wvec), {xp}, conj);
    }
    auto guardA = [&](int a, const Position& p) { return a != 1 || !inB(p); };
    auto guardB = [&](int b, const Position& q) { return b != 1 || !inB(q); };
    // Skips.
    for (int a = 0; a <= 2; ++a)
      for (int b = 0; b <= 2; ++b)
        for (const auto& p : positions)
          for (const auto& q : positions) {
            if (!guardA(a, p) || !guardB(b, q)) continue;
            std::vector<Formula> conj{
                pts(x, {positionVar(p), positionVar(q), ypp, zpp, upp, xp}),
                Formula::predAtom(bName(a, b), withHead(xp, wvec))};
            auto m = markers(ypp, zpp, upp);
            conj.insert(conj.end(), m.begin(), m.end());
            addRule(bName(a, b), withHead(x, wvec), {xp, ypp, zpp, upp},
                    conj);
          }
    // Simultaneous insertions at a cell whose both positions start words.
    struct Both {
      int a, b, na, nb;
      Var yv, zv, uv;
    };
    std::vector<Both> both{{0, 0, 1, 1, y, z, u},
                           {0, 1, 1, 2, y, zp, u},
                           {1, 0, 2, 1, yp, z, up},
                           {1, 1, 2, 2, yp, zp, up}};
    for (const auto& c : both)
      for (const auto& p : positions)
        for (const auto& q : positions) {
          if (!inB(p) || !inB(q)) continue;
          std::vector<Formula> conj{
              pts(x, {positionVar(p), positionVar(q), c.yv, c.zv, c.uv, xp}),
              Formula::predAtom(bName(c.na, c.nb), withHead(xp, wvec))};
          auto m = markers(c.yv, c.zv, c.uv);
          conj.insert(conj.end(), m.begin(), m.end());
          addRule(bName(c.a, c.b), withHead(x, wvec), {xp}, conj);
        }
    // y-side insertions with a fresh z-marker.
    struct OneSide {
      int idx, next;
      Var v1, v3;
    };
    std::vector<OneSide> ys{{0, 1, y, u}, {1, 2, yp, up}};
    for (const auto& c : ys)
      for (int b = 0; b <= 2; ++b)
        for (const auto& p : positions)
          for (const auto& q : positions) {
            if (!inB(p) || !guardB(b, q)) continue;
            std::vector<Formula> conj{
                pts(x, {positionVar(p), positionVar(q), c.v1, zpp, c.v3, xp}),
                Formula::predAtom(bName(c.next, b), withHead(xp, wvec))};
            auto m = markers(c.v1, zpp, c.v3);
            conj.insert(conj.end(), m.begin(), m.end());
            addRule(bName(c.idx, b), withHead(x, wvec), {xp, zpp}, conj);
          }
    // z-side insertions with fresh y/u-markers.
    std::vector<OneSide> zs{{0, 1, z, Var{}}, {1, 2, zp, Var{}}};
    for (const auto& c : zs)
      for (int a = 0; a <= 2; ++a)
        for (const auto& p : positions)
          for (const auto& q : positions) {
            if (!inB(q) || !guardA(a, p)) continue;
            std::vector<Formula> conj{
                pts(x, {positionVar(p), positionVar(q), ypp, c.v1, upp, xp}),
                Formula::predAtom(bName(a, c.next), withHead(xp, wvec))};
            auto m = markers(ypp, c.v1, upp);
            conj.insert(conj.end(), m.begin(), m.end());
            addRule(bName(a, c.idx), withHead(x, wvec), {xp, ypp, upp}, conj);
          }
    // Terminal cells.
    for (auto [a, b] : std::vector<std::pair<int, int>>{{2, 2}, {2, 1}, {1, 2}})
      for (const auto& p : positions)
        for (const auto& q : positions) {
          std::vector<Formula> conj{
              pts(x, {positionVar(p), positionVar(q), ypp, zpp, upp, nil})};
          auto m = markers(ypp, zpp, upp);
          conj.insert(conj.end(), m.begin(), m.end());
          addRule(bName(a, b), withHead(x, wvec), {ypp, zpp, upp}, conj);
        }
  }

  void buildC() {
    std::vector<Var> nil5{nil, nil, nil, nil, nil};
    for (const auto& p : positions)
      for (const auto& q : positions) {
        if (!inB(p) || !inB(q) || p == q) continue;
        std::vector<Var> t = nil5;
        t.push_back(xp);
        addRule("C", withHead(x, vvec), {xp, y, z, u},
                {pts(x, t),
                 Formula::predAtom(cName(p, q, 0, 0), withHead(xp, uvec)),
                 satom(TheorySym::S, y, z), satom(TheorySym::Sbar, u, z)});
      }
    for (const auto& p : positions)
      for (const auto& q : positions) {
        if (!inB(p) || !inB(q) || p == q) continue;
        // Skips over arbitrary cells.
        for (int a = 0; a <= 1; ++a)
          for (int b = 0; b <= 1; ++b)
            for (const auto& pn : positions)
              for (const auto& qn : positions) {
                std::vector<Formula> conj{
                    pts(x,
                        {positionVar(pn), positionVar(qn), ypp, zpp, upp, xp}),
                    Formula::predAtom(cName(p, q, a, b), withHead(xp, uvec))};
                auto m = markers(ypp, zpp, upp);
                conj.insert(conj.end(), m.begin(), m.end());
                addRule(cName(p, q, a, b), withHead(x, uvec),
                        {xp, ypp, zpp, upp}, conj);
              }
        // Both markers at one cell carrying (p,q).
        {
          std::vector<Formula> conj{
              pts(x, {positionVar(p), positionVar(q), y, z, u, xp}),
              Formula::predAtom(cName(p, q, 1, 1), withHead(xp, uvec))};
          auto m = markers(y, z, u);
          conj.insert(conj.end(), m.begin(), m.end());
          addRule(cName(p, q, 0, 0), withHead(x, uvec), {xp}, conj);
        }
        // y (and u) inserted at a cell whose u-position is p.
        for (int b = 0; b <= 1; ++b)
          for (const auto& qn : positions) {
            std::vector<Formula> conj{
                pts(x, {positionVar(p), positionVar(qn), y, zpp, u, xp}),
                Formula::predAtom(cName(p, q, 1, b), withHead(xp, uvec))};
            auto m = markers(y, zpp, u);
            conj.insert(conj.end(), m.begin(), m.end());
            addRule(cName(p, q, 0, b), withHead(x, uvec), {xp, zpp}, conj);
          }
        // z inserted at a cell whose v-position is q.
        for (int a = 0; a <= 1; ++a)
          for (const auto& pn : positions) {
            std::vector<Formula> conj{
                pts(x, {positionVar(pn), positionVar(q), ypp, z, upp, xp}),
                Formula::predAtom(cName(p, q, a, 1), withHead(xp, uvec))};
            auto m = markers(ypp, z, upp);
            conj.insert(conj.end(), m.begin(), m.end());
            addRule(cName(p, q, a, 0), withHead(x, uvec), {xp, ypp, upp},
                    conj);
          }
        // Terminal cell.
        for (const auto& pn : positions)
          for (const auto& qn : positions) {
            std::vector<Formula> conj{
                pts(x, {positionVar(pn), positionVar(qn), ypp, zpp, upp, nil})};
            auto m = markers(ypp, zpp, upp);
            conj.insert(conj.end(), m.begin(), m.end());
            addRule(cName(p, q, 1, 1), withHead(x, uvec), {ypp, zpp, upp},
                    conj);
          }
      }
  }

  EncodedProblem run() {
    declareFamilies();
    buildW();
    buildA();
    buildB();
    buildC();
    dedupe();
    EncodedProblem out;
    out.sid = sid;
    out.theory = theory;
    out.variableVector = vvec;

    Formula lhs = Formula::predAtom("W", withHead(x, vvec));
    Formula bAtom = Formula::predAtom("B", withHead(x, wvec));
    Formula bMember =
        Formula::existsAll({y, z, yp, zp, u, up}, bAtom);
    std::vector<Formula> rhs{Formula::predAtom("A", withHead(x, vvec)),
                             bMember,
                             Formula::predAtom("C", withHead(x, vvec))};
    out.sequent = Sequent{lhs, rhs, sid, theory};
    return out;
  }

  void dedupe() {
    std::set<std::string> seen;
    std::vector<Rule> rules;
    for (const auto& r : sid.rules) {
      std::string key = r.head;
      for (const auto& p : r.params) key += "," + p.name();
      key += "<=";
      key += formulaKey(r.body);
      if (seen.insert(key).second) rules.push_back(r);
    }
    sid.rules = std::move(rules);
  }

  static std::string formulaKey(const Formula& f) {
    switch (f.kind()) {
      case Formula::Kind::Emp:
        return "e";
      case Formula::Kind::PointsTo: {
        std::string s = "p:" + f.pointsTo().source.name();
        for (const auto& t : f.pointsTo().targets) s += "," + t.name();
        return s;
      }
      case Formula::Kind::PredAtom: {
        std::string s = "q:" + f.predAtom().pred;
        for (const auto& t : f.predAtom().args) s += "," + t.name();
        return s;
      }
      case Formula::Kind::TheoryAtom: {
        std::string s = std::string("t:") + theorySymName(f.theoryAtom().sym);
        for (const auto& t : f.theoryAtom().args) s += "," + t.name();
        return s;
      }
      case Formula::Kind::Star:
        return "(" + formulaKey(f.left()) + "*" + formulaKey(f.right()) + ")";
      case Formula::Kind::Or:
        return "(" + formulaKey(f.left()) + "|" + formulaKey(f.right()) + ")";
      case Formula::Kind::Exists:
        return "E" + f.bound().name() + "." + formulaKey(f.body());
    }
    return "?";
  }
};

// The chain of u-side positions visited while spelling out a tile sequence.
std::vector<Position> positionChain(const PcpInstance& inst, Side w,
                                    const std::vector<int>& tiles) {
  const auto& words = w == Side::U ? inst.u : inst.v;
  std::vector<Position> chain;
  for (int t : tiles) {
    int len = static_cast<int>(words[t - 1].size());
    for (int j = 1; j <= len; ++j) chain.push_back(Position{t, j});
  }
  return chain;
}

Structure buildFromChains(const PcpInstance& inst,
                          const std::vector<Position>& pChain,
                          const std::vector<Position>& qChain) {
  size_t m = pChain.size();
  // Marker locations use the alpha triples (3l, 3l+1, 3l+2); everything else
  // is laid out above them.
  Location base = 3 * static_cast<Location>(m) + 3;
  Structure s;
  Location nilLoc = base;
  Location xLoc = base + 1;
  s.store[Var("nil")] = nilLoc;
  s.store[Var("x")] = xLoc;
  std::vector<Location> list(m + 1);
  for (size_t l = 1; l <= m; ++l) list[l - 1] = base + 1 + l;
  list[m] = nilLoc;
  Location next = base + 2 + static_cast<Location>(m);
  for (const auto& p : allPositions(inst)) s.store[positionVar(p)] = next++;

  std::vector<Location> nil6(6, nilLoc);
  auto dummy = nil6;
  dummy[5] = m > 0 ? list[0] : nilLoc;
  s.heap[xLoc] = dummy;
  for (size_t l = 1; l <= m; ++l) {
    Location yl = 3 * l, zl = 3 * l + 1, ul = 3 * l + 2;
    s.heap[list[l - 1]] = {s.store[positionVar(pChain[l - 1])],
                           s.store[positionVar(qChain[l - 1])],
                           yl,
                           zl,
                           ul,
                           list[l]};
    s.heap[yl] = nil6;
    s.heap[zl] = nil6;
    s.heap[ul] = nil6;
  }
  return s;
}

}  // namespace

EncodedProblem encode(const PcpInstance& inst, TheoryId theory) {
  inst.validate();
  if (theory == TheoryId::Equality)
    throw Error("encode requires theory nat_succ or nat_leq");
  Builder b(inst, theory);
  return b.run();
}

Structure buildWitnessStructure(const PcpInstance& inst,
                                const std::vector<int>& solution,
                                TheoryId theory) {
  inst.validate();
  (void)theory;  // both theories use the same alpha-triple layout
  if (solution.empty())
    throw NotASolutionError("a solution is a nonempty tile sequence");
  std::string uWord, vWord;
  for (int t : solution) {
    if (t < 1 || t > inst.tiles())
      throw NotASolutionError("tile index " + std::to_string(t) +
                              " out of range");
    uWord += inst.u[t - 1];
    vWord += inst.v[t - 1];
  }
  if (uWord != vWord)
    throw NotASolutionError("tile sequence does not solve the instance: '" +
                            uWord + "' vs '" + vWord + "'");
  auto pChain = positionChain(inst, Side::U, solution);
  auto qChain = positionChain(inst, Side::V, solution);
  return buildFromChains(inst, pChain, qChain);
}

std::vector<Structure> enumerateWModels(const PcpInstance& inst,
                                        TheoryId theory, int maxWitnessLen) {
  inst.validate();
  (void)theory;
  std::vector<Structure> out;
  std::vector<Position> pChain, qChain;
  // Depth-first walk of the match/successor relations. A chain is complete
  // when both positions close the same tile.
  std::function<void()> walk = [&]() {
    const Position& p = pChain.back();
    const Position& q = qChain.back();
    if (!matchRelation(inst, p, q)) return;
    if (p.tile == q.tile && inE(inst, Side::U, p) && inE(inst, Side::V, q))
      out.push_back(buildFromChains(inst, pChain, qChain));
    if (static_cast<int>(pChain.size()) >= maxWitnessLen) return;
    for (const auto& pn : successorRelation(inst, Side::U, p)) {
      for (const auto& qn : successorRelation(inst, Side::V, q)) {
        pChain.push_back(pn);
        qChain.push_back(qn);
        walk();
        pChain.pop_back();
        qChain.pop_back();
      }
    }
  };
  for (const auto& b : allPositions(inst)) {
    if (!inB(b)) continue;
    pChain = {b};
    qChain = {b};
    walk();
  }
  return out;
}

PcpInstance parseTiles(const std::string& spec) {
  PcpInstance inst;
  std::string cur;
  auto take = [&](const std::string& pair) {
    auto colon = pair.find(':');
    if (colon == std::string::npos)
      throw InstanceInvariantError("tile '" + pair +
                                   "' is not of the form u:v");
    inst.u.push_back(pair.substr(0, colon));
    inst.v.push_back(pair.substr(colon + 1));
  };
  for (char c : spec) {
    if (c == ',') {
      take(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty() || inst.u.empty()) take(cur);
  inst.validate();
  return inst;
}

}  // namespace slkit
