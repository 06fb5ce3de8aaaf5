#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ldst/ast.hpp"
#include "ldst/lsst_ast.hpp"

namespace ldst {

struct TermDef {
    Name name;
    TypeRef declared; // may be null
    ExprRef body;
    SourcePos pos;
};

struct Program {
    std::vector<std::pair<Name, TypeRef>> type_defs; // expanded, in source order
    std::vector<TermDef> term_defs;
    std::optional<ExprRef> main;
};

struct LsstTermDef {
    Name name;
    lsst::LTypeRef declared;
    lsst::LExprRef body;
    SourcePos pos;
};

struct LsstProgram {
    std::vector<std::pair<Name, lsst::LTypeRef>> type_defs;
    std::vector<LsstTermDef> term_defs;
    std::optional<lsst::LExprRef> main;
};

// Concrete syntax per docs/grammar.ebnf. Type abbreviations and `dualof` are
// expanded at parse time. Errors carry a SourcePos inside the input.
Program parse_ldgv(const std::string& text);
LsstProgram parse_lsst(const std::string& text);

// Standalone forms, used by the CLI and tests. `abbrevs` supplies type
// abbreviations (e.g. from a parsed file).
TypeRef parse_type(const std::string& text,
                   const std::vector<std::pair<Name, TypeRef>>& abbrevs = {});
ExprRef parse_expr(const std::string& text,
                   const std::vector<std::pair<Name, TypeRef>>& abbrevs = {});

std::string print_program(const Program& p);

} // namespace ldst
