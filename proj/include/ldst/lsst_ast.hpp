#pragma once

#include <memory>
#include <optional>
#include <variant>
#include <vector>

#include "ldst/ast.hpp"

namespace ldst::lsst {

// Classical binary session types: send/receive, internal/external choice,
// and the two end markers.
struct LType;
using LTypeRef = std::shared_ptr<const LType>;

struct LUnit {};
struct LInt {};
struct LFun {
    Mult mult;
    LTypeRef dom;
    LTypeRef cod;
};
struct LProd {
    LTypeRef fst;
    LTypeRef snd;
};
struct LSend {
    LTypeRef payload;
    LTypeRef cont;
};
struct LRecv {
    LTypeRef payload;
    LTypeRef cont;
};
struct LSelect {
    std::vector<std::pair<Label, LTypeRef>> branches; // sorted by label
};
struct LBranch {
    std::vector<std::pair<Label, LTypeRef>> branches; // sorted by label
};
struct LEndOut {};
struct LEndIn {};

struct LType {
    std::variant<LUnit, LInt, LFun, LProd, LSend, LRecv, LSelect, LBranch, LEndOut, LEndIn> node;
    SourcePos pos;
};

LTypeRef lt_unit();
LTypeRef lt_int();
LTypeRef lt_fun(Mult m, LTypeRef dom, LTypeRef cod);
LTypeRef lt_prod(LTypeRef fst, LTypeRef snd);
LTypeRef lt_send(LTypeRef payload, LTypeRef cont);
LTypeRef lt_recv(LTypeRef payload, LTypeRef cont);
LTypeRef lt_select(std::vector<std::pair<Label, LTypeRef>> branches);
LTypeRef lt_branch(std::vector<std::pair<Label, LTypeRef>> branches);
LTypeRef lt_end_out();
LTypeRef lt_end_in();

bool lsst_is_session(const LTypeRef& t);
LTypeRef lsst_dual(const LTypeRef& t); // throws Error{NotASessionType}
bool lsst_sub(const LTypeRef& a, const LTypeRef& b);
bool lsst_type_eq(const LTypeRef& a, const LTypeRef& b);
Mult lsst_mult(const LTypeRef& t);
std::string print_ltype(const LTypeRef& t);

// Expressions. Annotation slots marked "filled by the checker" start out
// null and are populated by lsst_type_check; the translation requires them.
struct LExpr;
using LExprRef = std::shared_ptr<const LExpr>;

struct XVar {
    Name name;
};
struct XUnit {};
struct XInt {
    long long value;
};
struct XLam {
    Mult mult;
    Name binder;
    LTypeRef annot; // may be null; filled by the checker
    LExprRef body;
};
struct XApp {
    LExprRef fn;
    LExprRef arg;
};
struct XPair {
    LExprRef fst;
    LExprRef snd;
    LTypeRef fst_type; // filled by the checker
};
struct XLetPair {
    Name fst;
    Name snd;
    LExprRef scrutinee;
    LExprRef body;
};
struct XLet {
    Name binder;
    LExprRef bound;
    LExprRef body;
};
struct XFork {
    LExprRef body;
};
struct XNew {
    LTypeRef session;
};
struct XSend {
    LExprRef chan;
};
struct XRecv {
    LExprRef chan;
};
struct XSelect {
    Label lab;
    LExprRef chan;       // null for the bare (unapplied) form
    LTypeRef choice_type; // the full internal-choice type; filled by the checker
};
struct XRcase {
    LExprRef chan;
    std::vector<std::tuple<Label, Name, LExprRef>> branches; // sorted by label
};
struct XClose {
    LExprRef chan;
};
struct XWait {
    LExprRef chan;
};
struct XNeg {
    LExprRef arg;
};
struct XAdd {
    LExprRef lhs;
    LExprRef rhs;
};

struct LExpr {
    std::variant<XVar, XUnit, XInt, XLam, XApp, XPair, XLetPair, XLet, XFork, XNew,
                 XSend, XRecv, XSelect, XRcase, XClose, XWait, XNeg, XAdd>
        node;
    SourcePos pos;
};

LExprRef lx(LExpr e);

} // namespace ldst::lsst
