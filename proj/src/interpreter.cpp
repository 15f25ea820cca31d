#include "ffl/interpreter.hpp"

#include <cmath>
#include <iostream>
#include <map>
#include <sstream>

#include "ffl/csv.hpp"
#include "ffl/errors.hpp"

namespace ffl::script {

void CsvSink::header(std::span<const std::string> columns) {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (i) os_ << ',';
        os_ << columns[i];
    }
    os_ << '\n';
}

void CsvSink::row(std::span<const double> values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) os_ << ',';
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.10g", values[i]);
        os_ << buf;
    }
    os_ << '\n';
}

namespace {

struct Interp {
    bench::Testbench& tb;
    RowSink& sink;
    const RunOptions& opts;
    std::map<std::string, double> vars;
    double zc[4] = {0, 0, 0, 0};  // refreshed on measure
    std::size_t steps = 0;
    bool header_written = false;
    std::size_t header_arity = 0;

    void fuel(Pos pos) {
        if (++steps > opts.step_limit)
            throw ScriptRuntimeError("statement limit exceeded (" +
                                         std::to_string(opts.step_limit) + ")",
                                     pos);
    }

    double eval(const Expr& e) {
        switch (e.kind) {
            case Expr::Kind::Number:
                return e.number;
            case Expr::Kind::Var: {
                auto it = vars.find(e.name);
                if (it == vars.end())
                    throw ScriptRuntimeError("variable '" + e.name + "' is not defined", e.pos);
                return it->second;
            }
            case Expr::Kind::Builtin: {
                if (e.name == "T") return tb.clock();
                if (e.name == "BIAS") return tb.bias();
                if (e.name == "ZC11") return zc[0];
                if (e.name == "ZC12") return zc[1];
                if (e.name == "ZC21") return zc[2];
                return zc[3];
            }
            case Expr::Kind::Negate:
                return -eval(*e.lhs);
            case Expr::Kind::Binary: {
                const double a = eval(*e.lhs);
                const double b = eval(*e.rhs);
                switch (e.op) {
                    case '+': return a + b;
                    case '-': return a - b;
                    case '*': return a * b;
                    case '/':
                        if (b == 0.0) throw ScriptRuntimeError("division by zero", e.pos);
                        return a / b;
                }
                return 0;
            }
        }
        return 0;
    }

    static bool compare(Cmp c, double a, double b) {
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

    void exec_block(const std::vector<StmtPtr>& body) {
        for (const auto& s : body) exec(*s);
    }

    void exec(const Stmt& s) {
        fuel(s.pos);
        try {
            switch (s.kind) {
                case Stmt::Kind::Let:
                case Stmt::Kind::Assign:
                    vars[s.name] = eval(*s.expr);
                    break;
                case Stmt::Kind::Bias:
                    tb.set_bias(eval(*s.expr));
                    break;
                case Stmt::Kind::Wait:
                    tb.wait(eval(*s.expr));
                    break;
                case Stmt::Kind::Measure: {
                    const auto res = tb.sweep_once();
                    zc[0] = res.zc11;
                    zc[1] = res.zc12;
                    zc[2] = res.zc21;
                    zc[3] = res.zc22;
                    break;
                }
                case Stmt::Kind::Save: {
                    if (!header_written) {
                        std::vector<std::string> cols;
                        for (const auto& e : s.exprs) cols.push_back(expr_text(*e));
                        sink.header(cols);
                        header_written = true;
                        header_arity = s.exprs.size();
                    }
                    if (s.exprs.size() != header_arity)
                        throw ScriptRuntimeError(
                            "save arity differs from the first save statement", s.pos);
                    std::vector<double> vals;
                    vals.reserve(s.exprs.size());
                    for (const auto& e : s.exprs) vals.push_back(eval(*e));
                    sink.row(vals);
                    break;
                }
                case Stmt::Kind::Print: {
                    std::ostream& os = opts.print_to ? *opts.print_to : std::cout;
                    os << csv::exact(eval(*s.expr)) << '\n';
                    break;
                }
                case Stmt::Kind::If:
                    if (compare(s.cmp, eval(*s.cond_lhs), eval(*s.cond_rhs))) {
                        exec_block(s.body);
                    } else {
                        exec_block(s.else_body);
                    }
                    break;
                case Stmt::Kind::While:
                    while (compare(s.cmp, eval(*s.cond_lhs), eval(*s.cond_rhs))) {
                        exec_block(s.body);
                        fuel(s.pos);
                    }
                    break;
                case Stmt::Kind::Repeat:
                    for (long i = 0; i < s.repeat_count; ++i) {
                        exec_block(s.body);
                        fuel(s.pos);
                    }
                    break;
            }
        } catch (const ScriptRuntimeError&) {
            throw;
        } catch (const std::exception& ex) {
            // bench/domain failures surface with the statement position
            throw ScriptRuntimeError(ex.what(), s.pos);
        }
    }

    static std::string expr_text(const Expr& e) {
        Program p;
        auto stmt = std::make_unique<Stmt>();
        stmt->kind = Stmt::Kind::Print;
        stmt->expr = clone_expr(e);
        p.statements.push_back(std::move(stmt));
        std::string text = pretty_print(p);
        // strip the "print " prefix and trailing newline
        return text.substr(6, text.size() - 7);
    }

    static ExprPtr clone_expr(const Expr& e) {
        auto c = std::make_unique<Expr>();
        c->kind = e.kind;
        c->pos = e.pos;
        c->number = e.number;
        c->name = e.name;
        c->op = e.op;
        if (e.lhs) c->lhs = clone_expr(*e.lhs);
        if (e.rhs) c->rhs = clone_expr(*e.rhs);
        return c;
    }
};

}  // namespace

void run(const Program& program, bench::Testbench& tb, RowSink& sink, const RunOptions& opts) {
    Interp interp{tb, sink, opts, {}, {0, 0, 0, 0}, 0, false, 0};
    interp.exec_block(program.statements);
}

}  // namespace ffl::script
