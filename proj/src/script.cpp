#include "ffl/script.hpp"

#include <array>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <map>
#include <optional>
#include <sstream>

#include "ffl/csv.hpp"

namespace ffl::script {

namespace {

const std::array<const char*, 6> kBuiltins = {"ZC11", "ZC12", "ZC21", "ZC22", "T", "BIAS"};
const std::array<const char*, 10> kKeywords = {"let",   "bias", "wait",  "measure", "save",
                                               "print", "if",   "else",  "while",   "repeat"};

bool is_keyword(const std::string& s) {
    for (const char* k : kKeywords)
        if (s == k) return true;
    return false;
}

}  // namespace

bool is_builtin(const std::string& name) {
    for (const char* b : kBuiltins)
        if (name == b) return true;
    return false;
}

std::vector<Token> lex(const std::string& text) {
    std::vector<Token> out;
    int line = 1, col = 1;
    std::size_t i = 0;
    const std::size_t n = text.size();

    auto prev_ends_expr = [&out]() {
        if (out.empty()) return false;
        switch (out.back().kind) {
            case TokKind::Number:
            case TokKind::RParen:
                return true;
            case TokKind::Ident:
                // keywords open a statement or clause; a sign may follow
                return !is_keyword(out.back().text);
            default:
                return false;
        }
    };
    auto push = [&](TokKind k, std::string t, Pos p, double num = 0) {
        out.push_back({k, std::move(t), num, p});
    };

    while (i < n) {
        const char c = text[i];
        const Pos pos{line, col};
        if (c == '\n') {
            push(TokKind::Separator, "\n", pos);
            ++i;
            ++line;
            col = 1;
            continue;
        }
        if (c == ' ' || c == '\t' || c == '\r') {
            ++i;
            ++col;
            continue;
        }
        if (c == '#') {
            while (i < n && text[i] != '\n') {
                ++i;
                ++col;
            }
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && i + 1 < n &&
            std::isdigit(static_cast<unsigned char>(text[i + 1]))) ||
            (c == '-' && !prev_ends_expr() && i + 1 < n &&
             (std::isdigit(static_cast<unsigned char>(text[i + 1])) || text[i + 1] == '.'))) {
            const std::size_t start = i;
            if (text[i] == '-') ++i;
            while (i < n && (std::isdigit(static_cast<unsigned char>(text[i])) ||
                             text[i] == '.' || text[i] == 'e' || text[i] == 'E' ||
                             ((text[i] == '+' || text[i] == '-') &&
                              (text[i - 1] == 'e' || text[i - 1] == 'E'))))
                ++i;
            const std::string lit = text.substr(start, i - start);
            col += static_cast<int>(i - start);
            push(TokKind::Number, lit, pos, std::strtod(lit.c_str(), nullptr));
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            const std::size_t start = i;
            while (i < n && (std::isalnum(static_cast<unsigned char>(text[i])) || text[i] == '_'))
                ++i;
            const std::string word = text.substr(start, i - start);
            col += static_cast<int>(i - start);
            push(TokKind::Ident, word, pos);
            continue;
        }
        auto two = [&](char a, char b) {
            return c == a && i + 1 < n && text[i + 1] == b;
        };
        if (two('<', '=')) { push(TokKind::Le, "<=", pos); i += 2; col += 2; continue; }
        if (two('>', '=')) { push(TokKind::Ge, ">=", pos); i += 2; col += 2; continue; }
        if (two('=', '=')) { push(TokKind::EqEq, "==", pos); i += 2; col += 2; continue; }
        if (two('!', '=')) { push(TokKind::Ne, "!=", pos); i += 2; col += 2; continue; }
        switch (c) {
            case '+': push(TokKind::Plus, "+", pos); break;
            case '-': push(TokKind::Minus, "-", pos); break;
            case '*': push(TokKind::Star, "*", pos); break;
            case '/': push(TokKind::Slash, "/", pos); break;
            case '(': push(TokKind::LParen, "(", pos); break;
            case ')': push(TokKind::RParen, ")", pos); break;
            case '{': push(TokKind::LBrace, "{", pos); break;
            case '}': push(TokKind::RBrace, "}", pos); break;
            case ',': push(TokKind::Comma, ",", pos); break;
            case ';': push(TokKind::Separator, ";", pos); break;
            case '=': push(TokKind::Assign, "=", pos); break;
            case '<': push(TokKind::Lt, "<", pos); break;
            case '>': push(TokKind::Gt, ">", pos); break;
            default: throw UnknownCharacter(c, pos);
        }
        ++i;
        ++col;
    }
    out.push_back({TokKind::End, "", 0, {line, col}});
    return out;
}

// --- parser -------------------------------------------------------------------

namespace {

class Parser {
public:
    explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

    Program parse_program() {
        Program p;
        skip_separators();
        while (!at(TokKind::End)) {
            p.statements.push_back(parse_stmt());
            expect_separator_or(TokKind::End);
        }
        return p;
    }

private:
    const Token& cur() const { return toks_[idx_]; }
    bool at(TokKind k) const { return cur().kind == k; }
    Token take() { return toks_[idx_++]; }
    void skip_separators() {
        while (at(TokKind::Separator)) ++idx_;
    }
    void expect_separator_or(TokKind end) {
        if (at(end)) return;
        if (at(TokKind::RBrace)) return;  // block close also ends a statement
        if (!at(TokKind::Separator))
            throw SyntaxError("unexpected '" + cur().text + "'", "newline or ';'", cur().pos);
        skip_separators();
    }
    Token expect(TokKind k, const std::string& what) {
        if (!at(k))
            throw SyntaxError(at(TokKind::End) ? "unexpected end of input"
                                               : "unexpected '" + cur().text + "'",
                              what, cur().pos);
        return take();
    }

    ExprPtr make_expr(Expr::Kind k, Pos pos) {
        auto e = std::make_unique<Expr>();
        e->kind = k;
        e->pos = pos;
        return e;
    }

    ExprPtr parse_factor() {
        if (at(TokKind::Number)) {
            auto t = take();
            auto e = make_expr(Expr::Kind::Number, t.pos);
            e->number = t.number;
            return e;
        }
        if (at(TokKind::Minus)) {
            auto t = take();
            auto e = make_expr(Expr::Kind::Negate, t.pos);
            e->lhs = parse_factor();
            return e;
        }
        if (at(TokKind::LParen)) {
            take();
            auto e = parse_expr();
            expect(TokKind::RParen, "')'");
            return e;
        }
        if (at(TokKind::Ident)) {
            auto t = take();
            if (is_keyword(t.text))
                throw SyntaxError("keyword '" + t.text + "' cannot be used in an expression",
                                  "a value", t.pos);
            auto e = make_expr(is_builtin(t.text) ? Expr::Kind::Builtin : Expr::Kind::Var, t.pos);
            e->name = t.text;
            return e;
        }
        throw SyntaxError(at(TokKind::End) ? "unexpected end of input"
                                           : "unexpected '" + cur().text + "'",
                          "a number, variable or '('", cur().pos);
    }

    ExprPtr parse_term() {
        auto lhs = parse_factor();
        while (at(TokKind::Star) || at(TokKind::Slash)) {
            auto t = take();
            auto e = make_expr(Expr::Kind::Binary, t.pos);
            e->op = t.kind == TokKind::Star ? '*' : '/';
            e->lhs = std::move(lhs);
            e->rhs = parse_factor();
            lhs = std::move(e);
        }
        return lhs;
    }

    ExprPtr parse_expr() {
        auto lhs = parse_term();
        while (at(TokKind::Plus) || at(TokKind::Minus)) {
            auto t = take();
            auto e = make_expr(Expr::Kind::Binary, t.pos);
            e->op = t.kind == TokKind::Plus ? '+' : '-';
            e->lhs = std::move(lhs);
            e->rhs = parse_term();
            lhs = std::move(e);
        }
        return lhs;
    }

    Cmp parse_cmp() {
        switch (cur().kind) {
            case TokKind::Lt: take(); return Cmp::Lt;
            case TokKind::Le: take(); return Cmp::Le;
            case TokKind::Gt: take(); return Cmp::Gt;
            case TokKind::Ge: take(); return Cmp::Ge;
            case TokKind::EqEq: take(); return Cmp::Eq;
            case TokKind::Ne: take(); return Cmp::Ne;
            default:
                throw SyntaxError("unexpected '" + cur().text + "'",
                                  "a comparison (< <= > >= == !=)", cur().pos);
        }
    }

    std::vector<StmtPtr> parse_block() {
        expect(TokKind::LBrace, "'{'");
        std::vector<StmtPtr> body;
        skip_separators();
        while (!at(TokKind::RBrace)) {
            if (at(TokKind::End))
                throw SyntaxError("unexpected end of input", "'}'", cur().pos);
            body.push_back(parse_stmt());
            skip_separators();
        }
        take();  // '}'
        return body;
    }

    StmtPtr make_stmt(Stmt::Kind k, Pos pos) {
        auto s = std::make_unique<Stmt>();
        s->kind = k;
        s->pos = pos;
        return s;
    }

    StmtPtr parse_stmt() {
        // statement separators inside blocks
        skip_separators();
        if (at(TokKind::Separator)) skip_separators();
        const Token head = expect(TokKind::Ident, "a statement");
        const std::string& w = head.text;

        if (w == "let") {
            auto s = make_stmt(Stmt::Kind::Let, head.pos);
            s->name = expect(TokKind::Ident, "a variable name").text;
            if (is_keyword(s->name) || is_builtin(s->name))
                throw SyntaxError("'" + s->name + "' cannot be declared", "a fresh name",
                                  head.pos);
            expect(TokKind::Assign, "'='");
            s->expr = parse_expr();
            return s;
        }
        if (w == "bias") {
            auto s = make_stmt(Stmt::Kind::Bias, head.pos);
            s->expr = parse_expr();
            return s;
        }
        if (w == "wait") {
            auto s = make_stmt(Stmt::Kind::Wait, head.pos);
            s->expr = parse_expr();
            return s;
        }
        if (w == "measure") return make_stmt(Stmt::Kind::Measure, head.pos);
        if (w == "save") {
            auto s = make_stmt(Stmt::Kind::Save, head.pos);
            s->exprs.push_back(parse_expr());
            while (at(TokKind::Comma)) {
                take();
                s->exprs.push_back(parse_expr());
            }
            return s;
        }
        if (w == "print") {
            auto s = make_stmt(Stmt::Kind::Print, head.pos);
            s->expr = parse_expr();
            return s;
        }
        if (w == "if" || w == "while") {
            auto s = make_stmt(w == "if" ? Stmt::Kind::If : Stmt::Kind::While, head.pos);
            s->cond_lhs = parse_expr();
            s->cmp = parse_cmp();
            s->cond_rhs = parse_expr();
            s->body = parse_block();
            if (s->kind == Stmt::Kind::If && at(TokKind::Ident) && cur().text == "else") {
                take();
                s->else_body = parse_block();
            }
            return s;
        }
        if (w == "repeat") {
            auto s = make_stmt(Stmt::Kind::Repeat, head.pos);
            const Token count = expect(TokKind::Number, "a repeat count");
            if (count.number < 0 || count.number != static_cast<long>(count.number))
                throw SyntaxError("repeat count must be a non-negative integer literal",
                                  "an integer", count.pos);
            s->repeat_count = static_cast<long>(count.number);
            s->body = parse_block();
            return s;
        }
        if (w == "else") throw SyntaxError("'else' without matching 'if'", "a statement", head.pos);

        // plain assignment: IDENT '=' expr
        auto s = make_stmt(Stmt::Kind::Assign, head.pos);
        s->name = w;
        expect(TokKind::Assign, "'='");
        s->expr = parse_expr();
        return s;
    }

    std::vector<Token> toks_;
    std::size_t idx_ = 0;
};

}  // namespace

Program parse(std::vector<Token> tokens) { return Parser(std::move(tokens)).parse_program(); }

Program parse(const std::string& text) { return parse(lex(text)); }

// --- pretty printer --------------------------------------------------------------

namespace {

int precedence(char op) { return (op == '*' || op == '/') ? 2 : 1; }

void print_expr(std::ostream& os, const Expr& e, int parent_prec) {
    switch (e.kind) {
        case Expr::Kind::Number:
            if (e.number < 0) {
                os << '(' << csv::exact(e.number) << ')';
            } else {
                os << csv::exact(e.number);
            }
            return;
        case Expr::Kind::Var:
        case Expr::Kind::Builtin:
            os << e.name;
            return;
        case Expr::Kind::Negate:
            os << "-";
            print_expr(os, *e.lhs, 3);
            return;
        case Expr::Kind::Binary: {
            const int prec = precedence(e.op);
            const bool parens = prec < parent_prec;
            if (parens) os << '(';
            print_expr(os, *e.lhs, prec);
            os << ' ' << e.op << ' ';
            // right operand binds tighter to preserve left associativity
            print_expr(os, *e.rhs, prec + 1);
            if (parens) os << ')';
            return;
        }
    }
}

const char* cmp_text(Cmp c) {
    switch (c) {
        case Cmp::Lt: return "<";
        case Cmp::Le: return "<=";
        case Cmp::Gt: return ">";
        case Cmp::Ge: return ">=";
        case Cmp::Eq: return "==";
        case Cmp::Ne: return "!=";
    }
    return "<";
}

void print_stmt(std::ostream& os, const Stmt& s, int indent);

void print_block(std::ostream& os, const std::vector<StmtPtr>& body, int indent) {
    os << "{\n";
    for (const auto& st : body) print_stmt(os, *st, indent + 1);
    for (int i = 0; i < indent; ++i) os << "  ";
    os << "}";
}

void print_stmt(std::ostream& os, const Stmt& s, int indent) {
    for (int i = 0; i < indent; ++i) os << "  ";
    switch (s.kind) {
        case Stmt::Kind::Let:
            os << "let " << s.name << " = ";
            print_expr(os, *s.expr, 0);
            break;
        case Stmt::Kind::Assign:
            os << s.name << " = ";
            print_expr(os, *s.expr, 0);
            break;
        case Stmt::Kind::Bias:
            os << "bias ";
            print_expr(os, *s.expr, 0);
            break;
        case Stmt::Kind::Wait:
            os << "wait ";
            print_expr(os, *s.expr, 0);
            break;
        case Stmt::Kind::Measure:
            os << "measure";
            break;
        case Stmt::Kind::Save:
            os << "save ";
            for (std::size_t i = 0; i < s.exprs.size(); ++i) {
                if (i) os << ", ";
                print_expr(os, *s.exprs[i], 0);
            }
            break;
        case Stmt::Kind::Print:
            os << "print ";
            print_expr(os, *s.expr, 0);
            break;
        case Stmt::Kind::If:
        case Stmt::Kind::While:
            os << (s.kind == Stmt::Kind::If ? "if " : "while ");
            print_expr(os, *s.cond_lhs, 0);
            os << ' ' << cmp_text(s.cmp) << ' ';
            print_expr(os, *s.cond_rhs, 0);
            os << ' ';
            print_block(os, s.body, indent);
            if (!s.else_body.empty()) {
                os << " else ";
                print_block(os, s.else_body, indent);
            }
            break;
        case Stmt::Kind::Repeat:
            os << "repeat " << s.repeat_count << ' ';
            print_block(os, s.body, indent);
            break;
    }
    os << '\n';
}

}  // namespace

std::string pretty_print(const Program& p) {
    std::ostringstream os;
    for (const auto& s : p.statements) print_stmt(os, *s, 0);
    return os.str();
}

// --- checker -----------------------------------------------------------------------

namespace {

struct CheckCtx {
    Diagnostics* diags;
    std::set<std::string> declared;
    std::map<std::string, std::optional<double>> consts;
    bool measured = false;  // a measure appeared earlier in program order

    void error(const std::string& code, const std::string& msg, Pos pos) {
        diags->items.push_back({Diagnostic::Severity::Error, code, msg, pos});
    }
    void warn(const std::string& code, const std::string& msg, Pos pos) {
        diags->items.push_back({Diagnostic::Severity::Warning, code, msg, pos});
    }
};

bool expr_uses_measurement(const Expr& e) {
    switch (e.kind) {
        case Expr::Kind::Builtin:
            return e.name != "T" && e.name != "BIAS";
        case Expr::Kind::Binary:
            return expr_uses_measurement(*e.lhs) || expr_uses_measurement(*e.rhs);
        case Expr::Kind::Negate:
            return expr_uses_measurement(*e.lhs);
        default:
            return false;
    }
}

// Abstract evaluation: nullopt = not a compile-time constant.
std::optional<double> eval_expr(CheckCtx& ctx, const Expr& e) {
    switch (e.kind) {
        case Expr::Kind::Number:
            return e.number;
        case Expr::Kind::Builtin:
            if (e.name != "T" && e.name != "BIAS" && !ctx.measured)
                ctx.warn("use-before-measure",
                         "builtin " + e.name + " read before any measure", e.pos);
            return std::nullopt;
        case Expr::Kind::Var: {
            if (!ctx.declared.count(e.name)) {
                ctx.error("undeclared-variable", "variable '" + e.name + "' used before 'let'",
                          e.pos);
                return std::nullopt;
            }
            auto it = ctx.consts.find(e.name);
            return it == ctx.consts.end() ? std::nullopt : it->second;
        }
        case Expr::Kind::Negate: {
            auto v = eval_expr(ctx, *e.lhs);
            return v ? std::optional<double>(-*v) : std::nullopt;
        }
        case Expr::Kind::Binary: {
            auto a = eval_expr(ctx, *e.lhs);
            auto b = eval_expr(ctx, *e.rhs);
            if (e.op == '/' && b && *b == 0.0) {
                ctx.error("divide-by-zero", "division by constant zero", e.pos);
                return std::nullopt;
            }
            if (!a || !b) return std::nullopt;
            switch (e.op) {
                case '+': return *a + *b;
                case '-': return *a - *b;
                case '*': return *a * *b;
                case '/': return *a / *b;
            }
            return std::nullopt;
        }
    }
    return std::nullopt;
}

void collect_assigned(const std::vector<StmtPtr>& body, std::set<std::string>& names) {
    for (const auto& s : body) {
        if (s->kind == Stmt::Kind::Assign || s->kind == Stmt::Kind::Let) names.insert(s->name);
        collect_assigned(s->body, names);
        collect_assigned(s->else_body, names);
    }
}

bool contains_measure(const std::vector<StmtPtr>& body) {
    for (const auto& s : body) {
        if (s->kind == Stmt::Kind::Measure) return true;
        if (contains_measure(s->body) || contains_measure(s->else_body)) return true;
    }
    return false;
}

bool cmp_eval(Cmp c, double a, double b) {
    switch (c) {
        case Cmp::Lt: return a < b;
        case Cmp::Le: return a <= b;
        case Cmp::Gt: return a > b;
        case Cmp::Ge: return a >= b;
        case Cmp::Eq: return a == b;
        case Cmp::Ne: return a != b;
    }
    return false;
}

void check_block(CheckCtx& ctx, const std::vector<StmtPtr>& body) {
    bool unreachable = false;
    for (const auto& sp : body) {
        const Stmt& s = *sp;
        if (unreachable) {
            ctx.warn("unreachable", "statement cannot be reached past an endless loop", s.pos);
            continue;
        }
        switch (s.kind) {
            case Stmt::Kind::Let: {
                if (ctx.declared.count(s.name))
                    ctx.warn("redeclared", "variable '" + s.name + "' re-declared", s.pos);
                auto v = eval_expr(ctx, *s.expr);
                ctx.declared.insert(s.name);
                ctx.consts[s.name] = v;
                break;
            }
            case Stmt::Kind::Assign: {
                if (is_builtin(s.name)) {
                    ctx.error("assign-builtin", "cannot assign to builtin " + s.name, s.pos);
                    break;
                }
                auto v = eval_expr(ctx, *s.expr);
                if (!ctx.declared.count(s.name)) {
                    ctx.error("undeclared-variable",
                              "variable '" + s.name + "' assigned before 'let'", s.pos);
                    break;
                }
                ctx.consts[s.name] = v;
                break;
            }
            case Stmt::Kind::Bias: {
                auto v = eval_expr(ctx, *s.expr);
                if (v && std::abs(*v) > 10.0)
                    ctx.error("bias-out-of-range",
                              "bias " + csv::exact(*v) + " V exceeds the +/-10 V range", s.pos);
                break;
            }
            case Stmt::Kind::Wait: {
                auto v = eval_expr(ctx, *s.expr);
                if (v && *v < 0)
                    ctx.error("invalid-duration",
                              "wait " + csv::exact(*v) + " s is negative", s.pos);
                break;
            }
            case Stmt::Kind::Measure:
                ctx.measured = true;
                break;
            case Stmt::Kind::Save:
            case Stmt::Kind::Print:
                for (const auto& e : s.exprs) eval_expr(ctx, *e);
                if (s.expr) eval_expr(ctx, *s.expr);
                break;
            case Stmt::Kind::If: {
                eval_expr(ctx, *s.cond_lhs);
                eval_expr(ctx, *s.cond_rhs);
                if ((s.cmp == Cmp::Eq || s.cmp == Cmp::Ne) &&
                    (expr_uses_measurement(*s.cond_lhs) || expr_uses_measurement(*s.cond_rhs)))
                    ctx.warn("measurement-equality",
                             "exact equality against a measured value is unreliable", s.pos);
                // branches may or may not run: forget constness of anything assigned
                std::set<std::string> assigned;
                collect_assigned(s.body, assigned);
                collect_assigned(s.else_body, assigned);
                check_block(ctx, s.body);
                check_block(ctx, s.else_body);
                for (const auto& n : assigned) ctx.consts[n] = std::nullopt;
                break;
            }
            case Stmt::Kind::While: {
                auto a = eval_expr(ctx, *s.cond_lhs);
                auto b = eval_expr(ctx, *s.cond_rhs);
                if ((s.cmp == Cmp::Eq || s.cmp == Cmp::Ne) &&
                    (expr_uses_measurement(*s.cond_lhs) || expr_uses_measurement(*s.cond_rhs)))
                    ctx.warn("measurement-equality",
                             "exact equality against a measured value is unreliable", s.pos);
                std::set<std::string> assigned;
                collect_assigned(s.body, assigned);
                const bool cond_const_true = a && b && cmp_eval(s.cmp, *a, *b);
                const bool cond_can_change =
                    expr_uses_measurement(*s.cond_lhs) || expr_uses_measurement(*s.cond_rhs) ||
                    [&] {
                        // condition depends on a variable assigned in the body
                        std::set<std::string> used;
                        std::function<void(const Expr&)> walk = [&](const Expr& e) {
                            if (e.kind == Expr::Kind::Var) used.insert(e.name);
                            if (e.lhs) walk(*e.lhs);
                            if (e.rhs) walk(*e.rhs);
                        };
                        walk(*s.cond_lhs);
                        walk(*s.cond_rhs);
                        for (const auto& n : used)
                            if (assigned.count(n)) return true;
                        return false;
                    }();
                for (const auto& n : assigned) ctx.consts[n] = std::nullopt;
                check_block(ctx, s.body);
                if (cond_const_true && !cond_can_change && !contains_measure(s.body)) {
                    ctx.warn("endless-loop",
                             "loop condition is constant and the body never measures", s.pos);
                    unreachable = true;
                }
                break;
            }
            case Stmt::Kind::Repeat: {
                std::set<std::string> assigned;
                collect_assigned(s.body, assigned);
                check_block(ctx, s.body);
                for (const auto& n : assigned) ctx.consts[n] = std::nullopt;
                break;
            }
        }
    }
}

}  // namespace

Diagnostics check(const Program& p) {
    Diagnostics diags;
    CheckCtx ctx{&diags, {}, {}, false};
    check_block(ctx, p.statements);
    diags.declared_vars = ctx.declared;
    return diags;
}

}  // namespace ffl::script
