// slkit: check / transform / encode-pcp / solve for separation-logic
// entailment problems with inductive definitions and theory atoms.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "slkit/conditions.hpp"
#include "slkit/core.hpp"
#include "slkit/parser.hpp"
#include "slkit/pcp.hpp"
#include "slkit/semantics.hpp"
#include "slkit/transform.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitViolations = 1;
constexpr int kExitInputError = 2;
constexpr int kExitBudget = 3;
constexpr int kExitNoCountermodel = 10;

std::string readFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw slkit::Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void writeFile(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw slkit::Error("cannot write '" + path + "'");
  out << text;
}

nlohmann::json reportJson(const std::string& name,
                          const slkit::ConditionReport& rep) {
  nlohmann::json j;
  j["check"] = name;
  j["ok"] = rep.ok;
  j["violations"] = nlohmann::json::array();
  for (const auto& v : rep.violations) {
    nlohmann::json e;
    e["rule"] = v.ruleId;
    e["reason"] = v.reason;
    e["offending"] = v.offending;
    j["violations"].push_back(e);
  }
  return j;
}

void printReport(const std::string& name, const slkit::ConditionReport& rep) {
  std::cout << name << ": " << (rep.ok ? "ok" : "FAIL") << "\n";
  for (const auto& v : rep.violations)
    std::cout << "  " << v.ruleId << ": " << v.reason
              << (v.offending.empty() ? "" : "  [" + v.offending + "]")
              << "\n";
}

int runCheck(const std::string& path, bool json) {
  slkit::ProblemFile pf = slkit::parseProblem(readFile(path));
  auto progress = slkit::checkProgress(pf.sid);
  auto connectivity = slkit::checkConnectivity(pf.sid);
  auto establishment = slkit::checkEstablishment(pf.sid);
  auto alloc = slkit::computeAllocMap(pf.sid);
  bool ok = progress.ok && connectivity.ok && establishment.ok;
  if (json) {
    nlohmann::json j;
    j["schema"] = 1;
    j["ok"] = ok;
    j["checks"] = {reportJson("progress", progress),
                   reportJson("connectivity", connectivity),
                   reportJson("establishment", establishment)};
    j["allocCompatible"] = alloc.compatible;
    if (alloc.compatible) {
      nlohmann::json a = nlohmann::json::object();
      for (const auto& [p, s] : alloc.alloc) a[p] = s;
      j["alloc"] = a;
    } else {
      j["allocWitness"] = alloc.witness;
    }
    std::cout << j.dump(2) << "\n";
  } else {
    printReport("progress", progress);
    printReport("connectivity", connectivity);
    printReport("establishment", establishment);
    if (alloc.compatible) {
      std::cout << "alloc-compatible: yes\n";
    } else {
      std::cout << "alloc-compatible: no (predicate '" << alloc.witness
                << "')\n";
    }
  }
  return ok ? kExitOk : kExitViolations;
}

slkit::Sequent theOneSequent(const slkit::ProblemFile& pf, const char* verb) {
  auto sqs = slkit::sequents(pf);
  if (sqs.size() != 1)
    throw slkit::Error(std::string(verb) + " expects exactly one entailment, "
                       "found " + std::to_string(sqs.size()));
  return sqs.front();
}

int runTransform(const std::string& inPath, const std::string& outPath,
                 bool eliminateEq, bool allocCompat, bool prune,
                 const std::string& traceDir) {
  slkit::ProblemFile pf = slkit::parseProblem(readFile(inPath));
  slkit::Sequent sq = theOneSequent(pf, "transform");
  if (prune) sq = slkit::pruneUnreachable(sq);
  slkit::Sequent out = sq;
  if (eliminateEq) {
    auto [res, trace] = slkit::eliminateEqualities(sq);
    out = res;
    if (!traceDir.empty()) {
      std::filesystem::create_directories(traceDir);
      for (const auto& snap : trace.snapshots) {
        writeFile(traceDir + "/" + snap.label + ".sid",
                  slkit::printProblem(slkit::toProblemFile(snap.sequent)));
      }
      nlohmann::json metrics = nlohmann::json::array();
      for (const auto& snap : trace.snapshots)
        metrics.push_back({{"step", snap.label},
                           {"width", snap.width},
                           {"size", snap.size}});
      nlohmann::json j;
      j["schema"] = 1;
      j["steps"] = metrics;
      writeFile(traceDir + "/metrics.json", j.dump(2) + "\n");
    }
  } else if (allocCompat) {
    out = slkit::makeAllocCompatible(sq);
  }
  writeFile(outPath, slkit::printProblem(slkit::toProblemFile(out)));
  return kExitOk;
}

int runEncodePcp(const std::string& tiles, const std::string& theoryName,
                 const std::string& outPath) {
  slkit::PcpInstance inst = slkit::parseTiles(tiles);
  auto theory = slkit::theoryFromName(theoryName);
  if (!theory)
    throw slkit::UnknownTheoryError("unknown theory '" + theoryName + "'");
  slkit::EncodedProblem enc = slkit::encode(inst, *theory);
  writeFile(outPath, slkit::printProblem(slkit::toProblemFile(enc.sequent)));
  return kExitOk;
}

int runSolve(const std::string& path, slkit::SearchBounds bounds, int jobs,
             bool json) {
  slkit::ProblemFile pf = slkit::parseProblem(readFile(path));
  slkit::Sequent sq = theOneSequent(pf, "solve");
  auto model = slkit::countermodelSearch(sq, bounds, jobs);
  if (model) {
    if (json) {
      nlohmann::json j = nlohmann::json::parse(slkit::structureToJson(*model));
      j["schema"] = 1;
      j["result"] = "countermodel";
      std::cout << j.dump(2) << "\n";
    } else {
      std::cout << "countermodel found (heap size " << model->heapSize()
                << "):\n" << slkit::structureToJson(*model) << "\n";
    }
    return kExitOk;
  }
  if (json) {
    nlohmann::json j;
    j["schema"] = 1;
    j["result"] = "none_within_bounds";
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "no countermodel within bounds (this is NOT a validity "
                 "proof)\n";
  }
  return kExitNoCountermodel;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"separation logic toolkit: inductive definitions, theory "
               "atoms, equality elimination, PCP reductions"};
  app.require_subcommand(1);

  std::string inPath, outPath, traceDir, tiles;
  std::string theoryName = "nat_succ";
  bool json = false, eliminateEq = false, allocCompat = false, prune = false;
  slkit::SearchBounds bounds;
  bounds.maxHeapSize = 4;
  bounds.maxLocation = 8;
  int jobs = 1;

  auto* check = app.add_subcommand("check",
                                   "validate progress/connectivity/"
                                   "establishment of a .sid file");
  check->add_option("file", inPath)->required();
  check->add_flag("--json", json);

  auto* transform = app.add_subcommand(
      "transform", "rewrite the entailment (equality elimination or "
                   "alloc-compatibility splitting)");
  transform->add_option("file", inPath)->required();
  transform->add_option("-o,--output", outPath)->required();
  transform->add_flag("--eliminate-eq", eliminateEq);
  transform->add_flag("--alloc-compat", allocCompat);
  transform->add_flag("--prune-unreachable", prune);
  transform->add_option("--trace", traceDir);

  auto* encodePcp = app.add_subcommand(
      "encode-pcp", "emit the entailment encoding a PCP instance");
  encodePcp->add_option("--tiles", tiles, "comma-separated u:v pairs")
      ->required();
  encodePcp->add_option("--theory", theoryName, "nat_succ or nat_leq");
  encodePcp->add_option("-o,--output", outPath)->required();

  auto* solve = app.add_subcommand(
      "solve", "bounded countermodel search (small bounds by default; the "
               "search is exponential)");
  solve->add_option("file", inPath)->required();
  solve->add_option("--max-heap", bounds.maxHeapSize);
  solve->add_option("--max-locs", bounds.maxLocation);
  solve->add_option("--budget", bounds.nodeLimit,
                    "search node limit (0 = unlimited)");
  solve->add_option("--extra-budget", bounds.extraExistentialBudget,
                    "extra existential witness locations");
  solve->add_option("--jobs", jobs);
  solve->add_flag("--json", json);

  CLI11_PARSE(app, argc, argv);

  if (const char* env = std::getenv("SLKIT_BUDGET"))
    bounds.nodeLimit = std::strtoull(env, nullptr, 10);

  try {
    if (check->parsed()) return runCheck(inPath, json);
    if (transform->parsed()) {
      if (eliminateEq == allocCompat) {
        std::cerr << "error: pass exactly one of --eliminate-eq / "
                     "--alloc-compat\n";
        return kExitInputError;
      }
      return runTransform(inPath, outPath, eliminateEq, allocCompat, prune,
                          traceDir);
    }
    if (encodePcp->parsed()) return runEncodePcp(tiles, theoryName, outPath);
    if (solve->parsed()) return runSolve(inPath, bounds, jobs, json);
  } catch (const slkit::BudgetExceededError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBudget;
  } catch (const slkit::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  return kExitInputError;
}
