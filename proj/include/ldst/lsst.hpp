#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ldst/checker.hpp"
#include "ldst/eval.hpp"
#include "ldst/lsst_ast.hpp"
#include "ldst/parser.hpp"

namespace ldst::lsst {

// Ordered environment for the classical frontend, threaded in/out like the
// main checker's.
class LEnv {
public:
    LEnv bind(Name n, LTypeRef t) const;
    std::optional<LTypeRef> lookup(Name n) const;
    LEnv consume(Name n) const;
    bool bound(Name n) const { return lookup(n).has_value(); }
    static bool same_bindings(const LEnv& a, const LEnv& b);
    const std::vector<std::pair<Name, LTypeRef>>& entries() const { return entries_; }

private:
    std::vector<std::pair<Name, LTypeRef>> entries_;
};

struct LSynth {
    LTypeRef type;
    LEnv out;
};

// Typed program: the input with annotation slots filled in.
struct TypedLsstProgram {
    LsstProgram program;
};

class LsstChecker {
public:
    LSynth synth(const LEnv& env, const LExprRef& e, LExprRef* annotated);
    LEnv check(const LEnv& env, const LExprRef& e, const LTypeRef& t, LExprRef* annotated);

    // Checks every definition and returns the annotation-carrying program.
    // Raises Error on the first failure of a definition.
    TypedLsstProgram check_program(const LsstProgram& prog);

private:
    std::vector<std::string> trace_;
    LEnv drop_binding(const LEnv& env, Name n, SourcePos pos);
    [[noreturn]] void fail(ErrCode code, const std::string& msg, SourcePos pos);
};

// The typed translation into LDGV.
TypeRef translate_type(const LTypeRef& t);
ExprRef translate_expr(const LExprRef& e);
Program translate(const TypedLsstProgram& tp);

// Synchronous reduction of LSST programs on the same soup scheduler shape as
// the LDGV evaluator.
struct LsstOutcome {
    OutcomeKind kind;
    std::string detail;
    RtRef main_result;
    long steps = 0;
};

LsstOutcome lsst_run(const LsstProgram& prog, long max_steps = 100000);

// Co-runs a typed LSST program against its translation: after every LSST
// step the LDGV side must reach the translation of the new configuration
// within `resync_bound` steps. Records per-step counts.
struct SimulationReport {
    bool ok = true;
    std::string detail;
    long lsst_steps = 0;
    long ldgv_steps = 0;
    int max_resync = 0; // largest number of LDGV steps for one LSST step
    std::string lsst_result;
    std::string ldgv_result;
    std::string render_text() const;
    std::string render_json() const;
};

SimulationReport simulate_check(const LsstProgram& prog, long max_steps = 100000,
                                int resync_bound = 8);

} // namespace ldst::lsst
