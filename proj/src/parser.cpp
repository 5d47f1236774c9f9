#include "slkit/parser.hpp"

#include <cctype>
#include <sstream>

namespace slkit {

namespace {

enum class Tok {
  Ident, Int, LBrace, RBrace, LParen, RParen, Semi, Comma, Dot, Star, Or,
  Arrow, RuleArrow, Turnstile, Eq, Neq,
  KwSid, KwKappa, KwTheory, KwEntail, KwEmp, KwFalse, KwEx,
  End,
};

struct Token {
  Tok kind;
  std::string text;
  int line;
  int col;
};

const char* tokName(Tok t) {
  switch (t) {
    case Tok::Ident: return "identifier";
    case Tok::Int: return "integer";
    case Tok::LBrace: return "'{'";
    case Tok::RBrace: return "'}'";
    case Tok::LParen: return "'('";
    case Tok::RParen: return "')'";
    case Tok::Semi: return "';'";
    case Tok::Comma: return "','";
    case Tok::Dot: return "'.'";
    case Tok::Star: return "'*'";
    case Tok::Or: return "'\\/'";
    case Tok::Arrow: return "'->'";
    case Tok::RuleArrow: return "'<='";
    case Tok::Turnstile: return "'|-'";
    case Tok::Eq: return "'='";
    case Tok::Neq: return "'!='";
    case Tok::KwSid: return "'sid'";
    case Tok::KwKappa: return "'kappa'";
    case Tok::KwTheory: return "'theory'";
    case Tok::KwEntail: return "'entail'";
    case Tok::KwEmp: return "'emp'";
    case Tok::KwFalse: return "'false'";
    case Tok::KwEx: return "'EX'";
    case Tok::End: return "end of input";
  }
  return "?";
}

class Lexer {
public:
  explicit Lexer(const std::string& text) : text_(text) {}

  Token next() {
    skipWhitespaceAndComments();
    int line = line_, col = col_;
    if (pos_ >= text_.size()) return {Tok::End, "", line, col};
    char c = text_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::string id;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
              text_[pos_] == '_' || text_[pos_] == '%'))
        id.push_back(take());
      if (id == "sid") return {Tok::KwSid, id, line, col};
      if (id == "kappa") return {Tok::KwKappa, id, line, col};
      if (id == "theory") return {Tok::KwTheory, id, line, col};
      if (id == "entail") return {Tok::KwEntail, id, line, col};
      if (id == "emp") return {Tok::KwEmp, id, line, col};
      if (id == "false") return {Tok::KwFalse, id, line, col};
      if (id == "EX") return {Tok::KwEx, id, line, col};
      return {Tok::Ident, id, line, col};
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::string num;
      while (pos_ < text_.size() &&
             std::isdigit(static_cast<unsigned char>(text_[pos_])))
        num.push_back(take());
      return {Tok::Int, num, line, col};
    }
    switch (c) {
      case '{': take(); return {Tok::LBrace, "{", line, col};
      case '}': take(); return {Tok::RBrace, "}", line, col};
      case '(': take(); return {Tok::LParen, "(", line, col};
      case ')': take(); return {Tok::RParen, ")", line, col};
      case ';': take(); return {Tok::Semi, ";", line, col};
      case ',': take(); return {Tok::Comma, ",", line, col};
      case '.': take(); return {Tok::Dot, ".", line, col};
      case '*': take(); return {Tok::Star, "*", line, col};
      case '=': take(); return {Tok::Eq, "=", line, col};
      case '\\':
        take();
        if (pos_ < text_.size() && text_[pos_] == '/') {
          take();
          return {Tok::Or, "\\/", line, col};
        }
        throw SyntaxError(line, col, "expected '/' after '\\'");
      case '|':
        take();
        if (pos_ < text_.size() && text_[pos_] == '-') {
          take();
          return {Tok::Turnstile, "|-", line, col};
        }
        return {Tok::Or, "|", line, col};
      case '-':
        take();
        if (pos_ < text_.size() && text_[pos_] == '>') {
          take();
          return {Tok::Arrow, "->", line, col};
        }
        throw SyntaxError(line, col, "expected '>' after '-'");
      case '<':
        take();
        if (pos_ < text_.size() && text_[pos_] == '=') {
          take();
          return {Tok::RuleArrow, "<=", line, col};
        }
        throw SyntaxError(line, col, "expected '=' after '<'");
      case '!':
        take();
        if (pos_ < text_.size() && text_[pos_] == '=') {
          take();
          return {Tok::Neq, "!=", line, col};
        }
        throw SyntaxError(line, col, "expected '=' after '!'");
      default:
        throw SyntaxError(line, col,
                          std::string("unexpected character '") + c + "'");
    }
  }

private:
  char take() {
    char c = text_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  void skipWhitespaceAndComments() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        take();
      } else if (c == '/' && pos_ + 1 < text_.size() &&
                 text_[pos_ + 1] == '/') {
        while (pos_ < text_.size() && text_[pos_] != '\n') take();
      } else {
        break;
      }
    }
  }

  const std::string& text_;
  size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

class Parser {
public:
  explicit Parser(const std::string& text) : lex_(text) { advance(); }

  static constexpr int kMaxNesting = 2000;

  ProblemFile parseProblem() {
    ProblemFile p;
    expect(Tok::KwSid);
    expect(Tok::LBrace);
    expect(Tok::KwKappa);
    expect(Tok::Eq);
    Token k = expect(Tok::Int);
    p.sid.kappa = std::stoi(k.text);
    if (p.sid.kappa <= 0)
      throw SyntaxError(k.line, k.col, "kappa must be positive");
    expect(Tok::Semi);
    while (cur_.kind != Tok::RBrace) {
      p.sid.rules.push_back(parseRule(p.sid));
      expect(Tok::Semi);
    }
    expect(Tok::RBrace);
    if (cur_.kind == Tok::KwTheory) {
      advance();
      Token name = expect(Tok::Ident);
      auto t = theoryFromName(name.text);
      if (!t)
        throw UnknownTheoryError("unknown theory '" + name.text + "' at " +
                                 std::to_string(name.line) + ":" +
                                 std::to_string(name.col));
      p.theory = *t;
      expect(Tok::Semi);
    }
    if (cur_.kind == Tok::KwEntail) {
      advance();
      expect(Tok::LBrace);
      while (cur_.kind != Tok::RBrace) {
        EntailmentBody e;
        e.lhs = parseFormula(p.sid, true);
        expect(Tok::Turnstile);
        e.rhs.push_back(parseFormula(p.sid, true));
        while (cur_.kind == Tok::Comma) {
          advance();
          e.rhs.push_back(parseFormula(p.sid, true));
        }
        p.entailments.push_back(std::move(e));
        if (cur_.kind == Tok::Semi) advance();
      }
      expect(Tok::RBrace);
    }
    expect(Tok::End);
    return p;
  }

  Formula parseBareFormula() {
    SID dummy;
    dummy.kappa = -1;  // disables kappa and arity validation
    Formula f = parseFormula(dummy, false);
    expect(Tok::End);
    return f;
  }

private:
  void advance() { cur_ = lex_.next(); }

  Token expect(Tok kind) {
    if (cur_.kind != kind)
      throw SyntaxError(cur_.line, cur_.col,
                        std::string("expected ") + tokName(kind) + ", found " +
                            tokName(cur_.kind));
    Token t = cur_;
    advance();
    return t;
  }

  Var varFromIdent(const Token& t) {
    if (theorySymFromName(t.text))
      throw SyntaxError(t.line, t.col,
                        "'" + t.text + "' is a reserved theory predicate name");
    return Var(t.text);
  }

  Rule parseRule(SID& sid) {
    Token name = expect(Tok::Ident);
    if (theorySymFromName(name.text))
      throw SyntaxError(name.line, name.col,
                        "'" + name.text +
                            "' is a reserved theory predicate name");
    expect(Tok::LParen);
    std::vector<Var> params;
    if (cur_.kind != Tok::RParen) {
      params.push_back(varFromIdent(expect(Tok::Ident)));
      while (cur_.kind == Tok::Comma) {
        advance();
        params.push_back(varFromIdent(expect(Tok::Ident)));
      }
    }
    expect(Tok::RParen);
    for (size_t i = 0; i < params.size(); ++i)
      for (size_t j = i + 1; j < params.size(); ++j)
        if (params[i] == params[j])
          throw SyntaxError(name.line, name.col,
                            "rule head parameters must be distinct");
    declareChecked(sid, name, static_cast<int>(params.size()));
    expect(Tok::RuleArrow);
    Formula body = parseFormula(sid, true);
    return Rule{name.text, std::move(params), std::move(body)};
  }

  void declareChecked(SID& sid, const Token& name, int arity) {
    if (sid.declared(name.text) && sid.arity(name.text) != arity)
      throw ArityMismatchError(
          "predicate '" + name.text + "' used with arity " +
          std::to_string(arity) + " but declared with arity " +
          std::to_string(sid.arity(name.text)) + " (at " +
          std::to_string(name.line) + ":" + std::to_string(name.col) + ")");
    sid.declare(name.text, arity);
  }

  Formula parseFormula(SID& sid, bool validate) {
    if (++depth_ > kMaxNesting)
      throw SyntaxError(cur_.line, cur_.col, "formula nesting too deep");
    Formula acc = parseStarExpr(sid, validate);
    while (cur_.kind == Tok::Or) {
      advance();
      acc = Formula::disj(acc, parseStarExpr(sid, validate));
    }
    --depth_;
    return acc;
  }

  Formula parseStarExpr(SID& sid, bool validate) {
    Formula acc = parsePrimary(sid, validate);
    while (cur_.kind == Tok::Star) {
      advance();
      acc = Formula::star(acc, parsePrimary(sid, validate));
    }
    return acc;
  }

  std::vector<Var> parseArgList() {
    expect(Tok::LParen);
    std::vector<Var> args;
    if (cur_.kind != Tok::RParen) {
      args.push_back(varFromIdent(expect(Tok::Ident)));
      while (cur_.kind == Tok::Comma) {
        advance();
        args.push_back(varFromIdent(expect(Tok::Ident)));
      }
    }
    expect(Tok::RParen);
    return args;
  }

  Formula parsePrimary(SID& sid, bool validate) {
    switch (cur_.kind) {
      case Tok::LParen: {
        advance();
        Formula f = parseFormula(sid, validate);
        expect(Tok::RParen);
        return f;
      }
      case Tok::KwEmp:
        advance();
        return Formula::emp();
      case Tok::KwFalse:
        advance();
        return Formula::theoryAtom(TheorySym::False, {});
      case Tok::KwEx: {
        advance();
        Var b = varFromIdent(expect(Tok::Ident));
        expect(Tok::Dot);
        return Formula::exists(b, parseFormula(sid, validate));
      }
      case Tok::Ident: {
        Token head = cur_;
        advance();
        if (cur_.kind == Tok::LParen) {
          std::vector<Var> args = parseArgList();
          if (auto sym = theorySymFromName(head.text)) {
            if (validate &&
                static_cast<int>(args.size()) != theorySymArity(*sym))
              throw ArityMismatchError(
                  "theory predicate '" + head.text + "' expects " +
                  std::to_string(theorySymArity(*sym)) + " arguments (at " +
                  std::to_string(head.line) + ":" + std::to_string(head.col) +
                  ")");
            return Formula::theoryAtom(*sym, std::move(args));
          }
          if (validate)
            declareChecked(sid, head, static_cast<int>(args.size()));
          return Formula::predAtom(head.text, std::move(args));
        }
        if (cur_.kind == Tok::Arrow) {
          advance();
          Var src = varFromIdent(head);
          std::vector<Var> targets = parseArgList();
          if (validate && sid.kappa > 0 &&
              static_cast<int>(targets.size()) != sid.kappa)
            throw ArityMismatchError(
                "points-to atom has " + std::to_string(targets.size()) +
                " targets but kappa is " + std::to_string(sid.kappa) +
                " (at " + std::to_string(head.line) + ":" +
                std::to_string(head.col) + ")");
          return Formula::pointsTo(std::move(src), std::move(targets));
        }
        if (cur_.kind == Tok::Eq) {
          advance();
          Var rhsv = varFromIdent(expect(Tok::Ident));
          return Formula::theoryAtom(TheorySym::Eq,
                                     {varFromIdent(head), rhsv});
        }
        if (cur_.kind == Tok::Neq) {
          advance();
          Var rhsv = varFromIdent(expect(Tok::Ident));
          return Formula::theoryAtom(TheorySym::Neq,
                                     {varFromIdent(head), rhsv});
        }
        throw SyntaxError(cur_.line, cur_.col,
                          "expected '(', '->', '=' or '!=' after identifier, "
                          "found " + std::string(tokName(cur_.kind)));
      }
      default:
        throw SyntaxError(cur_.line, cur_.col,
                          std::string("expected a formula, found ") +
                              tokName(cur_.kind));
    }
  }

  Lexer lex_;
  Token cur_;
  int depth_ = 0;
};

// --- printing ---------------------------------------------------------------

void printFormulaRec(std::ostringstream& out, const Formula& f);

void printChild(std::ostringstream& out, const Formula& f, bool parens) {
  if (parens) {
    out << "(";
    printFormulaRec(out, f);
    out << ")";
  } else {
    printFormulaRec(out, f);
  }
}

void printArgs(std::ostringstream& out, const std::vector<Var>& args) {
  out << "(";
  for (size_t i = 0; i < args.size(); ++i) {
    if (i) out << ",";
    out << args[i].name();
  }
  out << ")";
}

void printFormulaRec(std::ostringstream& out, const Formula& f) {
  using K = Formula::Kind;
  switch (f.kind()) {
    case K::Emp:
      out << "emp";
      return;
    case K::PointsTo:
      out << f.pointsTo().source.name() << " -> ";
      printArgs(out, f.pointsTo().targets);
      return;
    case K::PredAtom:
      out << f.predAtom().pred;
      printArgs(out, f.predAtom().args);
      return;
    case K::TheoryAtom: {
      const auto& a = f.theoryAtom();
      if (a.sym == TheorySym::Eq) {
        out << a.args[0].name() << " = " << a.args[1].name();
      } else if (a.sym == TheorySym::Neq) {
        out << a.args[0].name() << " != " << a.args[1].name();
      } else if (a.sym == TheorySym::False) {
        out << "false";
      } else {
        out << theorySymName(a.sym);
        printArgs(out, a.args);
      }
      return;
    }
    case K::Star: {
      const Formula& l = f.left();
      const Formula& r = f.right();
      printChild(out, l, l.kind() == K::Or || l.kind() == K::Exists);
      out << " * ";
      printChild(out, r,
                 r.kind() == K::Or || r.kind() == K::Star ||
                     r.kind() == K::Exists);
      return;
    }
    case K::Or: {
      const Formula& l = f.left();
      const Formula& r = f.right();
      printChild(out, l, l.kind() == K::Exists);
      out << " \\/ ";
      printChild(out, r, r.kind() == K::Or || r.kind() == K::Exists);
      return;
    }
    case K::Exists:
      out << "EX " << f.bound().name() << " . ";
      printFormulaRec(out, f.body());
      return;
  }
}

}  // namespace

ProblemFile parseProblem(const std::string& text) {
  Parser p(text);
  return p.parseProblem();
}

Formula parseFormula(const std::string& text) {
  Parser p(text);
  return p.parseBareFormula();
}

std::string printFormula(const Formula& f) {
  std::ostringstream out;
  printFormulaRec(out, f);
  return out.str();
}

std::string printRule(const Rule& r) {
  std::ostringstream out;
  out << r.head;
  printArgs(out, r.params);
  out << " <= ";
  printFormulaRec(out, r.body);
  return out.str();
}

std::string printProblem(const ProblemFile& p) {
  std::ostringstream out;
  out << "sid {\n";
  out << "  kappa = " << p.sid.kappa << ";\n";
  for (const auto& r : p.sid.rules) out << "  " << printRule(r) << ";\n";
  out << "}\n";
  out << "theory " << theoryName(p.theory) << ";\n";
  if (!p.entailments.empty()) {
    out << "entail {\n";
    for (const auto& e : p.entailments) {
      out << "  " << printFormula(e.lhs) << " |- ";
      for (size_t i = 0; i < e.rhs.size(); ++i) {
        if (i) out << ", ";
        out << printFormula(e.rhs[i]);
      }
      out << ";\n";
    }
    out << "}\n";
  }
  return out.str();
}

std::vector<Sequent> sequents(const ProblemFile& p) {
  std::vector<Sequent> out;
  for (const auto& e : p.entailments)
    out.push_back(Sequent{e.lhs, e.rhs, p.sid, p.theory});
  return out;
}

ProblemFile toProblemFile(const Sequent& sq) {
  ProblemFile p;
  p.sid = sq.sid;
  p.theory = sq.theory;
  p.entailments.push_back(EntailmentBody{sq.lhs, sq.rhs});
  return p;
}

}  // namespace slkit
