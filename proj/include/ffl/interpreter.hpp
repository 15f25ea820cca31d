#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ffl/script.hpp"
#include "ffl/testbench.hpp"

namespace ffl::script {

struct ScriptRuntimeError : std::runtime_error {
    Pos pos;
    ScriptRuntimeError(const std::string& what, Pos p)
        : std::runtime_error("runtime error at line " + std::to_string(p.line) + ", col " +
                             std::to_string(p.col) + ": " + what),
          pos(p) {}
};

// Receives `save` output. The header is fixed by the first row written;
// later rows must have the same arity.
class RowSink {
public:
    virtual ~RowSink() = default;
    virtual void header(std::span<const std::string> columns) = 0;
    virtual void row(std::span<const double> values) = 0;
};

class NullSink final : public RowSink {
public:
    void header(std::span<const std::string>) override {}
    void row(std::span<const double>) override {}
};

// CSV sink with the column headers generated from the saved expressions.
class CsvSink final : public RowSink {
public:
    explicit CsvSink(std::ostream& os) : os_(os) {}
    void header(std::span<const std::string> columns) override;
    void row(std::span<const double> values) override;

private:
    std::ostream& os_;
};

struct RunOptions {
    std::size_t step_limit = 10'000'000;  // executed statements
    std::ostream* print_to = nullptr;     // defaults to std::cout
};

// Execute a checked program against the bench. Builtins ZCxy refresh only
// on `measure`; loops are strict and deterministic; runtime failures abort
// with the statement position while already-written sink rows remain.
void run(const Program& program, bench::Testbench& tb, RowSink& sink, const RunOptions& opts = {});

}  // namespace ffl::script
