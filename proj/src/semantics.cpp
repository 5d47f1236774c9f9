#include "slkit/semantics.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <cassert>
#include <set>
#include <thread>

#include "json.hpp"
#include "slkit/conditions.hpp"

namespace slkit {

bool Structure::storeInjective() const {
  std::set<Location> seen;
  for (const auto& [v, l] : store)
    if (!seen.insert(l).second) return false;
  return true;
}

bool theoryHolds(TheoryId theory, TheorySym sym,
                 const std::vector<Location>& args) {
  if (!theoryAllows(theory, sym))
    throw Error(std::string("theory '") + theoryName(theory) +
                "' does not interpret '" + theorySymName(sym) + "'");
  switch (sym) {
    case TheorySym::Eq: return args[0] == args[1];
    case TheorySym::Neq: return args[0] != args[1];
    case TheorySym::False: return false;
    case TheorySym::Succ: return args[1] == args[0] + 1;
    case TheorySym::Leq: return args[0] <= args[1];
    case TheorySym::Geq: return args[0] >= args[1];
    case TheorySym::S:
      return theory == TheoryId::NatSucc ? args[1] == args[0] + 1
                                         : args[0] <= args[1];
    case TheorySym::Sbar:
      // nat_succ: the complement of S; on equal locations Sbar is
      // completed as "not S". nat_leq: Sbar is >=.
      return theory == TheoryId::NatSucc ? args[1] != args[0] + 1
                                         : args[0] >= args[1];
  }
  return false;
}

namespace {

// ---------------------------------------------------------------------------
// Goal-directed satisfaction engine.
//
// A formula is flattened into a list of goals sharing one claim set over the
// heap's cells. Separating conjunction corresponds to partitioning the claim
// set; theory atoms and emp claim nothing. Forced steps (points-to atoms
// with known source, ground theory atoms) run eagerly; the engine branches
// on disjunctions, rule choices, cell choices and witness values, in that
// order. In generate mode there is no fixed heap: points-to goals create
// cells, bounded by maxCells and locLimit.
// ---------------------------------------------------------------------------

struct Cell {
  Location addr;
  std::vector<Location> targets;
};

struct EngineConfig {
  const SID* sid = nullptr;
  TheoryId theory = TheoryId::Equality;
  bool generate = false;
  int maxCells = 0;          // generate mode
  Location locLimit = 0;     // generate mode: locations in [0, locLimit)
  int extraBudget = 0;       // check mode witness budget
  uint64_t nodeLimit = 0;
};

class Engine {
public:
  Engine(const EngineConfig& cfg) : cfg_(cfg) {}

  // Check mode. `store` must be total on fv(f).
  bool check(const Structure& s, const Formula& f) {
    ensureProgressing();
    cells_.clear();
    for (const auto& [a, t] : s.heap) cells_.push_back(Cell{a, t});
    candidates_ = witnessCandidates(s, cfg_.extraBudget);
    State st;
    st.goals.push_back(bind(f, s.store));
    st.claimed.assign(cells_.size(), false);
    bool found = false;
    solve(st, [&](const State&) {
      found = true;
      return false;  // stop at first witness
    });
    return found;
  }

  // Generate mode: enumerates models of f whose store extends `base` (total
  // on `universe`). Yields until the visitor returns false.
  void generate(const std::map<Var, Location>& base,
                const std::vector<Var>& universe, const Formula& f,
                const std::function<bool(const Structure&)>& yield) {
    ensureProgressing();
    State st;
    st.goals.push_back(bind(f, base));
    bool go = true;
    solve(st, [&](const State& fin) {
      Structure out;
      for (const auto& [v, l] : base) out.store[v] = l;
      for (const auto& c : fin.cells) out.heap[c.addr] = c.targets;
      (void)universe;
      go = yield(out);
      return go;
    });
  }

private:
  struct State {
    std::vector<Formula> goals;
    std::map<Var, Location> env;
    std::vector<bool> claimed;  // check mode
    std::vector<Cell> cells;    // generate mode
  };

  void ensureProgressing() const {
    ConditionReport rep = checkProgress(*cfg_.sid);
    if (!rep.ok)
      throw NonPcSIDError("SID violates progress: " +
                          rep.violations.front().reason);
  }

  static std::vector<Location> witnessCandidates(const Structure& s,
                                                 int budget) {
    std::set<Location> c;
    for (const auto& [a, t] : s.heap) {
      c.insert(a);
      c.insert(t.begin(), t.end());
    }
    for (const auto& [v, l] : s.store) c.insert(l);
    for (int i = 0; i <= budget; ++i) c.insert(static_cast<Location>(i));
    return {c.begin(), c.end()};
  }

  // Renames free variables of f to engine variables carrying their store
  // value; binders are renamed lazily during inlining.
  Formula bind(const Formula& f, const std::map<Var, Location>& store) {
    boundSeed_ = 0;
    Substitution sigma;
    for (const auto& v : freeVars(f)) {
      auto it = store.find(v);
      if (it == store.end())
        throw Error("store is not total on fv: missing '" + v.name() + "'");
      sigma.set(v, holeFor(it->second));
    }
    FreshNames dummy;
    return applySubst(f, sigma, &dummy);
  }

  // Engine variables: "%h<loc>" is a pre-assigned hole; "%g<n>" a fresh
  // unknown introduced for a binder or rule existential.
  Var holeFor(Location l) { return Var("%h" + std::to_string(l)); }
  Var freshUnknown() { return Var("%g" + std::to_string(++boundSeed_)); }

  static bool isHole(const Var& v) {
    return v.name().size() > 2 && v.name()[0] == '%' && v.name()[1] == 'h';
  }
  static Location holeValue(const Var& v) {
    return std::stoull(v.name().substr(2));
  }

  std::optional<Location> value(const State& st, const Var& v) const {
    if (isHole(v)) return holeValue(v);
    auto it = st.env.find(v);
    if (it == st.env.end()) return std::nullopt;
    return it->second;
  }

  void tick() {
    if (cfg_.nodeLimit && ++nodes_ > cfg_.nodeLimit)
      throw BudgetExceededError("search node budget exceeded");
  }

  // Returns false when the visitor asked to stop the whole search.
  bool solve(State st, const std::function<bool(const State&)>& visit) {
    tick();
    // Forced steps, re-scanned until a fixpoint: consuming a points-to atom
    // can ground a theory atom deferred earlier in the list.
    bool changed = true;
    while (changed) {
      changed = false;
      for (size_t i = 0; i < st.goals.size();) {
        const Formula g = st.goals[i];
        switch (g.kind()) {
          case Formula::Kind::Emp:
            st.goals.erase(st.goals.begin() + i);
            changed = true;
            continue;
          case Formula::Kind::Star:
            st.goals[i] = g.left();
            st.goals.insert(st.goals.begin() + i + 1, g.right());
            changed = true;
            continue;
          case Formula::Kind::Exists: {
            Var u = freshUnknown();
            FreshNames dummy;
            st.goals[i] = applySubst(
                g.body(), Substitution::single(g.bound(), u), &dummy);
            changed = true;
            continue;
          }
          case Formula::Kind::TheoryAtom: {
            const auto& a = g.theoryAtom();
            std::vector<Location> vals;
            bool ground = true;
            for (const auto& v : a.args) {
              auto val = value(st, v);
              if (!val) {
                ground = false;
                break;
              }
              vals.push_back(*val);
            }
            if (!ground) {
              ++i;
              continue;
            }
            if (!theoryHolds(cfg_.theory, a.sym, vals))
              return true;  // dead end
            st.goals.erase(st.goals.begin() + i);
            changed = true;
            continue;
          }
          case Formula::Kind::PointsTo: {
            int step = forcePointsTo(st, i);
            if (step < 0) return true;  // dead end
            if (step == 0) {
              ++i;
              continue;
            }
            changed = true;
            continue;  // goal consumed
          }
          default:
            ++i;
            continue;
        }
      }
    }

    // Spatial demand pruning.
    int demand = 0;
    for (const auto& g : st.goals)
      if (g.kind() == Formula::Kind::PointsTo ||
          g.kind() == Formula::Kind::PredAtom)
        ++demand;
    if (cfg_.generate) {
      if (static_cast<int>(st.cells.size()) + demand > cfg_.maxCells)
        return true;
    } else {
      int unclaimed = 0;
      for (bool c : st.claimed)
        if (!c) ++unclaimed;
      if (demand > unclaimed) return true;
    }

    if (st.goals.empty()) {
      if (!cfg_.generate) {
        for (bool c : st.claimed)
          if (!c) return true;  // heap not fully covered
      }
      return visit(st);
    }

    // Branch: disjunction first.
    for (size_t i = 0; i < st.goals.size(); ++i) {
      if (st.goals[i].kind() == Formula::Kind::Or) {
        Formula g = st.goals[i];
        State l = st;
        l.goals[i] = g.left();
        if (!solve(std::move(l), visit)) return false;
        State r = std::move(st);
        r.goals[i] = g.right();
        return solve(std::move(r), visit);
      }
    }

    // Points-to with unknown source (check: over unclaimed cells;
    // generate: over fresh addresses) or unknown targets (generate).
    for (size_t i = 0; i < st.goals.size(); ++i) {
      if (st.goals[i].kind() != Formula::Kind::PointsTo) continue;
      const auto& a = st.goals[i].pointsTo();
      auto src = value(st, a.source);
      if (!cfg_.generate) {
        assert(!src);  // assigned sources were forced above
        for (size_t ci = 0; ci < cells_.size(); ++ci) {
          if (st.claimed[ci]) continue;
          State next = st;
          next.env[a.source] = cells_[ci].addr;
          if (!solve(std::move(next), visit)) return false;
        }
        return true;
      }
      // Generate mode: pick the first unknown among source and targets.
      if (!src) {
        for (Location l = 0; l < cfg_.locLimit; ++l) {
          bool used = false;
          for (const auto& c : st.cells)
            if (c.addr == l) used = true;
          if (used) continue;
          State next = st;
          next.env[a.source] = l;
          if (!solve(std::move(next), visit)) return false;
        }
        return true;
      }
      for (const auto& t : a.targets) {
        if (value(st, t)) continue;
        for (Location l = 0; l < cfg_.locLimit; ++l) {
          State next = st;
          next.env[t] = l;
          if (!solve(std::move(next), visit)) return false;
        }
        return true;
      }
      assert(false);  // fully ground points-to would have been forced
    }

    // Predicate atom: prefer one with an assigned root.
    size_t pick = st.goals.size();
    for (size_t i = 0; i < st.goals.size(); ++i) {
      if (st.goals[i].kind() != Formula::Kind::PredAtom) continue;
      if (pick == st.goals.size()) pick = i;
      const auto& a = st.goals[i].predAtom();
      if (!a.args.empty() && value(st, a.args[0])) {
        pick = i;
        break;
      }
    }
    if (pick < st.goals.size()) {
      Formula g = st.goals[pick];
      const auto& a = g.predAtom();
      if (!cfg_.sid->declared(a.pred))
        throw UnknownPredicateError("unknown predicate '" + a.pred + "'");
      for (const Rule* r : cfg_.sid->rulesFor(a.pred)) {
        State next = st;
        next.goals[pick] = instantiate(*r, a.args);
        if (!solve(std::move(next), visit)) return false;
      }
      return true;
    }

    // Only theory atoms with unknowns remain: branch the first unknown over
    // the candidate range.
    for (size_t i = 0; i < st.goals.size(); ++i) {
      if (st.goals[i].kind() != Formula::Kind::TheoryAtom) continue;
      for (const auto& v : st.goals[i].theoryAtom().args) {
        if (value(st, v)) continue;
        if (cfg_.generate) {
          for (Location l = 0; l < cfg_.locLimit; ++l) {
            State next = st;
            next.env[v] = l;
            if (!solve(std::move(next), visit)) return false;
          }
        } else {
          for (Location l : candidates_) {
            State next = st;
            next.env[v] = l;
            if (!solve(std::move(next), visit)) return false;
          }
        }
        return true;
      }
    }
    assert(false);  // every goal shape is handled above
    return true;
  }

  // Forced points-to handling. Returns 1 if the goal was consumed, 0 if it
  // must wait (unknown source, or unknown targets in generate mode), -1 on
  // dead end.
  int forcePointsTo(State& st, size_t i) {
    const auto& a = st.goals[i].pointsTo();
    auto src = value(st, a.source);
    if (!src) return 0;
    if (!cfg_.generate) {
      // Locate the cell with this address.
      size_t ci = cells_.size();
      for (size_t k = 0; k < cells_.size(); ++k)
        if (cells_[k].addr == *src) ci = k;
      if (ci == cells_.size() || st.claimed[ci]) return -1;
      const auto& cell = cells_[ci];
      if (cell.targets.size() != a.targets.size()) return -1;
      // Unify targets against the cell.
      for (size_t k = 0; k < a.targets.size(); ++k) {
        auto tv = value(st, a.targets[k]);
        if (tv) {
          if (*tv != cell.targets[k]) return -1;
        } else {
          st.env[a.targets[k]] = cell.targets[k];
        }
      }
      st.claimed[ci] = true;
      st.goals.erase(st.goals.begin() + i);
      return 1;
    }
    // Generate mode: create the cell once all targets are ground.
    std::vector<Location> targets;
    for (const auto& t : a.targets) {
      auto tv = value(st, t);
      if (!tv) return 0;
      if (*tv >= cfg_.locLimit) return -1;
      targets.push_back(*tv);
    }
    if (*src >= cfg_.locLimit) return -1;
    for (const auto& c : st.cells)
      if (c.addr == *src) return -1;  // double allocation
    if (static_cast<int>(st.cells.size()) >= cfg_.maxCells) return -1;
    st.cells.push_back(Cell{*src, std::move(targets)});
    st.goals.erase(st.goals.begin() + i);
    return 1;
  }

  // Rule body with parameters replaced by the atom's arguments and
  // existentials replaced by fresh engine unknowns.
  Formula instantiate(const Rule& r, const std::vector<Var>& args) {
    if (r.params.size() != args.size())
      throw Error("arity mismatch unfolding '" + r.head + "'");
    struct Rec {
      Engine& eng;
      Formula run(const Formula& g, const Substitution& sigma) {
        switch (g.kind()) {
          case Formula::Kind::Emp:
            return g;
          case Formula::Kind::PointsTo: {
            const auto& a = g.pointsTo();
            return Formula::pointsTo(sigma.apply(a.source),
                                     sigma.apply(a.targets));
          }
          case Formula::Kind::PredAtom: {
            const auto& a = g.predAtom();
            return Formula::predAtom(a.pred, sigma.apply(a.args));
          }
          case Formula::Kind::TheoryAtom: {
            const auto& a = g.theoryAtom();
            return Formula::theoryAtom(a.sym, sigma.apply(a.args));
          }
          case Formula::Kind::Star:
            return Formula::star(run(g.left(), sigma), run(g.right(), sigma));
          case Formula::Kind::Or:
            return Formula::disj(run(g.left(), sigma), run(g.right(), sigma));
          case Formula::Kind::Exists: {
            Var u = eng.freshUnknown();
            Substitution inner = sigma;
            inner.set(g.bound(), u);
            return run(g.body(), inner);
          }
        }
        return g;
      }
    } rec{*this};
    Substitution sigma;
    for (size_t i = 0; i < r.params.size(); ++i) sigma.set(r.params[i], args[i]);
    return rec.run(r.body, sigma);
  }

  EngineConfig cfg_;
  std::vector<Cell> cells_;          // check mode heap
  std::vector<Location> candidates_; // check mode witness range
  uint64_t boundSeed_ = 0;
  uint64_t nodes_ = 0;
};

std::vector<std::map<Var, Location>> allStores(const std::vector<Var>& vars,
                                               Location limit,
                                               bool injective) {
  std::vector<std::map<Var, Location>> out;
  if (vars.empty()) {
    out.push_back({});
    return out;
  }
  if (limit == 0) return out;
  std::vector<Location> tuple(vars.size(), 0);
  while (true) {
    bool ok = true;
    if (injective) {
      for (size_t i = 0; i < tuple.size() && ok; ++i)
        for (size_t j = i + 1; j < tuple.size(); ++j)
          if (tuple[i] == tuple[j]) {
            ok = false;
            break;
          }
    }
    if (ok) {
      std::map<Var, Location> s;
      for (size_t i = 0; i < vars.size(); ++i) s[vars[i]] = tuple[i];
      out.push_back(std::move(s));
    }
    // Next tuple, lexicographic with the first variable most significant.
    size_t k = tuple.size();
    while (k > 0) {
      if (++tuple[k - 1] < limit) break;
      tuple[k - 1] = 0;
      --k;
    }
    if (k == 0) break;
  }
  return out;
}

}  // namespace

bool modelCheck(const Structure& s, const Formula& f, const SID& sid,
                TheoryId theory, int extraExistentialBudget,
                uint64_t nodeLimit) {
  EngineConfig cfg;
  cfg.sid = &sid;
  cfg.theory = theory;
  cfg.extraBudget = extraExistentialBudget;
  cfg.nodeLimit = nodeLimit;
  Engine eng(cfg);
  return eng.check(s, f);
}

bool checkCountermodel(const Structure& s, const Sequent& sq,
                       int extraExistentialBudget, uint64_t nodeLimit) {
  if (!s.storeInjective()) return false;
  for (const auto& v : freeVars(sq))
    if (!s.store.count(v))
      throw Error("store is not total on fv: missing '" + v.name() + "'");
  if (!modelCheck(s, sq.lhs, sq.sid, sq.theory, extraExistentialBudget,
                  nodeLimit))
    return false;
  for (const auto& g : sq.rhs)
    if (modelCheck(s, g, sq.sid, sq.theory, extraExistentialBudget, nodeLimit))
      return false;
  return true;
}

std::optional<Structure> countermodelSearch(const Sequent& sq,
                                            const SearchBounds& b, int jobs) {
  std::set<Var> fv = freeVars(sq);
  std::vector<Var> universe(fv.begin(), fv.end());
  std::vector<std::map<Var, Location>> stores;
  if (sq.theory == TheoryId::Equality) {
    // Equality-theory satisfaction is invariant under location bijections,
    // so any countermodel can be renamed onto the lexicographically first
    // injective store. Searching only that store returns the same first
    // hit as the full enumeration.
    if (universe.size() <= b.maxLocation) {
      std::map<Var, Location> canonical;
      Location next = 0;
      for (const auto& v : universe) canonical[v] = next++;
      stores.push_back(std::move(canonical));
    }
  } else {
    stores = allStores(universe, b.maxLocation, /*injective=*/true);
  }

  EngineConfig cfg;
  cfg.sid = &sq.sid;
  cfg.theory = sq.theory;
  cfg.generate = true;
  cfg.locLimit = b.maxLocation;
  cfg.nodeLimit = b.nodeLimit;

  // Shared node-budget accounting across stores: give each store search the
  // full limit; the practical budget is per-candidate.
  auto searchStore = [&](const std::map<Var, Location>& store,
                         int exactSize) -> std::optional<Structure> {
    EngineConfig c = cfg;
    c.maxCells = exactSize;
    Engine eng(c);
    std::optional<Structure> hit;
    eng.generate(store, universe, sq.lhs, [&](const Structure& m) {
      if (static_cast<int>(m.heapSize()) != exactSize) return true;
      if (checkCountermodel(m, sq, b.extraExistentialBudget, b.nodeLimit)) {
        hit = m;
        return false;
      }
      return true;
    });
    return hit;
  };

  for (int size = 0; size <= b.maxHeapSize; ++size) {
    if (jobs <= 1) {
      for (const auto& store : stores) {
        auto hit = searchStore(store, size);
        if (hit) return hit;
      }
    } else {
      std::atomic<size_t> bestIdx{stores.size()};
      std::vector<std::optional<Structure>> hits(stores.size());
      std::vector<std::thread> workers;
      std::atomic<size_t> cursor{0};
      std::mutex errMutex;
      std::exception_ptr firstError;
      for (int w = 0; w < jobs; ++w) {
        workers.emplace_back([&] {
          try {
            while (true) {
              size_t i = cursor.fetch_add(1);
              if (i >= stores.size()) return;
              if (i > bestIdx.load()) continue;
              auto hit = searchStore(stores[i], size);
              if (hit) {
                hits[i] = hit;
                size_t cur = bestIdx.load();
                while (i < cur && !bestIdx.compare_exchange_weak(cur, i)) {
                }
              }
            }
          } catch (...) {
            std::lock_guard<std::mutex> lock(errMutex);
            if (!firstError) firstError = std::current_exception();
          }
        });
      }
      for (auto& t : workers) t.join();
      if (firstError) std::rethrow_exception(firstError);
      size_t best = bestIdx.load();
      if (best < stores.size()) return hits[best];
    }
  }
  return std::nullopt;
}

std::vector<Structure> enumerateModels(const Formula& f, const SID& sid,
                                       TheoryId theory,
                                       const SearchBounds& b) {
  std::set<Var> fv = freeVars(f);
  std::vector<Var> universe(fv.begin(), fv.end());
  return enumerateModels(f, sid, theory, b, universe);
}

std::vector<Structure> enumerateModels(const Formula& f, const SID& sid,
                                       TheoryId theory, const SearchBounds& b,
                                       const std::vector<Var>& universe) {
  EngineConfig cfg;
  cfg.sid = &sid;
  cfg.theory = theory;
  cfg.generate = true;
  cfg.locLimit = b.maxLocation;
  cfg.maxCells = b.maxHeapSize;
  cfg.nodeLimit = b.nodeLimit;

  std::set<Structure> seen;
  for (const auto& store : allStores(universe, b.maxLocation, false)) {
    Engine eng(cfg);
    eng.generate(store, universe, f, [&](const Structure& m) {
      seen.insert(m);
      return true;
    });
  }
  return {seen.begin(), seen.end()};
}

std::string structureToJson(const Structure& s) {
  nlohmann::json j;
  j["store"] = nlohmann::json::object();
  for (const auto& [v, l] : s.store) j["store"][v.name()] = l;
  j["heap"] = nlohmann::json::object();
  for (const auto& [a, t] : s.heap) j["heap"][std::to_string(a)] = t;
  return j.dump();
}

Structure structureFromJson(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  Structure s;
  for (auto it = j.at("store").begin(); it != j.at("store").end(); ++it)
    s.store[Var(it.key())] = it.value().get<Location>();
  for (auto it = j.at("heap").begin(); it != j.at("heap").end(); ++it)
    s.heap[std::stoull(it.key())] = it.value().get<std::vector<Location>>();
  return s;
}

}  // namespace slkit
