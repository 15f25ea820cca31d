#pragma once

#include <memory>
#include <set>
#include <string>
#include <vector>

namespace ffl::script {

struct Pos {
    int line = 0, col = 0;  // 1-based
};

// --- errors ----------------------------------------------------------------

struct UnknownCharacter : std::runtime_error {
    Pos pos;
    char ch;
    UnknownCharacter(char c, Pos p)
        : std::runtime_error("unknown character '" + std::string(1, c) + "' at line " +
                             std::to_string(p.line) + ", col " + std::to_string(p.col)),
          pos(p), ch(c) {}
};

struct SyntaxError : std::runtime_error {
    Pos pos;
    std::string expected;
    SyntaxError(const std::string& what, const std::string& expect, Pos p)
        : std::runtime_error("syntax error at line " + std::to_string(p.line) + ", col " +
                             std::to_string(p.col) + ": " + what +
                             (expect.empty() ? "" : " (expected " + expect + ")")),
          pos(p), expected(expect) {}
};

// --- tokens ------------------------------------------------------------------

enum class TokKind {
    Ident, Number,
    Plus, Minus, Star, Slash,
    LParen, RParen, LBrace, RBrace,
    Comma, Assign,
    Lt, Le, Gt, Ge, EqEq, Ne,
    Separator,  // newline or ';'
    End,
};

struct Token {
    TokKind kind;
    std::string text;
    double number = 0;
    Pos pos;
};

// Tokenize UTF-8 text; '#' comments are skipped. A '-' directly followed by
// a digit lexes as part of the literal unless the previous token can end an
// expression, so `bias -3.3` yields [Ident, Number].
std::vector<Token> lex(const std::string& text);

// --- AST --------------------------------------------------------------------

struct Expr;
using ExprPtr = std::unique_ptr<Expr>;

struct Expr {
    enum class Kind { Number, Var, Builtin, Binary, Negate };
    Kind kind;
    Pos pos;
    double number = 0;      // Number
    std::string name;       // Var / Builtin
    char op = 0;            // Binary: + - * /
    ExprPtr lhs, rhs;       // Binary; Negate uses lhs
};

enum class Cmp { Lt, Le, Gt, Ge, Eq, Ne };

struct Stmt;
using StmtPtr = std::unique_ptr<Stmt>;

struct Stmt {
    enum class Kind { Let, Assign, Bias, Wait, Measure, Save, Print, If, While, Repeat };
    Kind kind;
    Pos pos;
    std::string name;             // Let / Assign target
    ExprPtr expr;                 // Let / Assign / Bias / Wait / Print
    std::vector<ExprPtr> exprs;   // Save columns
    ExprPtr cond_lhs, cond_rhs;   // If / While
    Cmp cmp = Cmp::Lt;
    long repeat_count = 0;        // Repeat
    std::vector<StmtPtr> body;
    std::vector<StmtPtr> else_body;
};

struct Program {
    std::vector<StmtPtr> statements;
};

bool is_builtin(const std::string& name);

Program parse(const std::string& text);
Program parse(std::vector<Token> tokens);

// Canonical source form; parse(pretty_print(p)) has the same AST.
std::string pretty_print(const Program& p);

// --- static checking -----------------------------------------------------------

struct Diagnostic {
    enum class Severity { Error, Warning };
    Severity severity;
    std::string code;
    std::string message;
    Pos pos;
};

struct Diagnostics {
    std::vector<Diagnostic> items;
    std::set<std::string> declared_vars;

    bool ok() const {
        for (const auto& d : items)
            if (d.severity == Diagnostic::Severity::Error) return false;
        return true;
    }
    std::size_t error_count() const {
        std::size_t n = 0;
        for (const auto& d : items) n += d.severity == Diagnostic::Severity::Error;
        return n;
    }
};

// Abstract pre-execution: no bench is touched. Detects undeclared variables,
// constant out-of-range bias, constant negative waits, division by a
// constant zero, equality comparisons against measurements, and statements
// that an obviously endless measurement-free loop makes unreachable.
Diagnostics check(const Program& p);

}  // namespace ffl::script
