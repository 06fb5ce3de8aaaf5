#pragma once

#include <string>

#include "ldst/ast.hpp"

namespace ldst {

// Emits the surface grammar from docs/grammar.ebnf; parse(print(x)) is
// alpha-equivalent to x. Binders with generated names are given readable
// printable names.
std::string print_type(const TypeRef& t);
std::string print_value(const ValueRef& v);
std::string print_expr(const ExprRef& e);
std::string print_process(const ProcessRef& p);

} // namespace ldst
