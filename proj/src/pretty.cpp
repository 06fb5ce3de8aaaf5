#include "ldst/pretty.hpp"

#include <functional>
#include <sstream>

namespace ldst {

namespace {

// Precedence levels, loosest to tightest.
enum TLevel { T_FULL = 0, T_PREFIX = 1, T_ATOM = 2 };
enum ELevel { E_FULL = 0, E_ADD = 1, E_APP = 2, E_ATOM = 3 };

void pt(std::ostream& os, const TypeRef& t, TLevel lv);
void pv(std::ostream& os, const ValueRef& v, ELevel lv);
void pe(std::ostream& os, const ExprRef& e, ELevel lv);

void paren(std::ostream& os, bool need, const std::function<void()>& body) {
    if (need) os << "(";
    body();
    if (need) os << ")";
}

void pt(std::ostream& os, const TypeRef& t, TLevel lv) {
    std::visit(
        [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, TUnit>) {
                os << "Unit";
            } else if constexpr (std::is_same_v<T, TInt>) {
                os << "Int";
            } else if constexpr (std::is_same_v<T, TNat>) {
                os << "Nat";
            } else if constexpr (std::is_same_v<T, TEnd>) {
                os << "End";
            } else if constexpr (std::is_same_v<T, TLabel>) {
                os << "{";
                bool first = true;
                for (Label l : n.set.labels()) {
                    if (!first) os << ", ";
                    first = false;
                    os << l.str();
                }
                os << "}";
            } else if constexpr (std::is_same_v<T, TEq>) {
                os << "(";
                pv(os, n.lhs, E_ATOM);
                os << " = ";
                pv(os, n.rhs, E_ATOM);
                os << " : ";
                pt(os, n.index, T_FULL);
                os << ")";
            } else if constexpr (std::is_same_v<T, TCase>) {
                os << "case ";
                pv(os, n.scrutinee, E_ATOM);
                os << " of {";
                bool first = true;
                for (const auto& [l, b] : n.branches) {
                    if (!first) os << ",";
                    first = false;
                    os << " " << l.str() << ": ";
                    pt(os, b, T_FULL);
                }
                os << " }";
            } else if constexpr (std::is_same_v<T, TPi>) {
                paren(os, lv > T_FULL, [&] {
                    const char* arrow = n.mult == Mult::Un ? " -> " : " -o ";
                    if (occurs_free(n.cod, n.binder)) {
                        os << "(" << n.binder.str() << " : ";
                        pt(os, n.dom, T_FULL);
                        os << ")" << arrow;
                    } else {
                        pt(os, n.dom, T_PREFIX);
                        os << arrow;
                    }
                    pt(os, n.cod, T_FULL);
                });
            } else if constexpr (std::is_same_v<T, TSigma>) {
                os << "[";
                if (occurs_free(n.snd, n.binder)) {
                    os << n.binder.str() << " : ";
                    pt(os, n.fst, T_FULL);
                } else {
                    pt(os, n.fst, T_FULL);
                }
                os << ", ";
                pt(os, n.snd, T_FULL);
                os << "]";
            } else if constexpr (std::is_same_v<T, TSend> || std::is_same_v<T, TRecv>) {
                paren(os, lv > T_PREFIX, [&] {
                    os << (std::is_same_v<T, TSend> ? "!" : "?");
                    if (occurs_free(n.cont, n.binder)) {
                        os << "(" << n.binder.str() << " : ";
                        pt(os, n.payload, T_FULL);
                        os << ") ";
                    } else {
                        pt(os, n.payload, T_ATOM);
                        os << ". ";
                    }
                    pt(os, n.cont, T_PREFIX);
                });
            } else if constexpr (std::is_same_v<T, TNatRec>) {
                paren(os, lv > T_PREFIX, [&] {
                    os << "rec ";
                    pv(os, n.scrutinee, E_ATOM);
                    os << " ";
                    pt(os, n.zero, T_ATOM);
                    os << " [" << n.rec_var.str() << "] ";
                    pt(os, n.succ, T_PREFIX);
                });
            } else if constexpr (std::is_same_v<T, TVar>) {
                if (n.pol == Polarity::Neg) os << "~";
                os << n.name.str();
            }
        },
        t->node);
}

void pv(std::ostream& os, const ValueRef& v, ELevel lv) {
    std::visit(
        [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, VVar>) {
                os << n.name.str();
            } else if constexpr (std::is_same_v<T, VChan>) {
                os << "#chan" << n.endpoint;
            } else if constexpr (std::is_same_v<T, VLabel>) {
                os << n.lab.str();
            } else if constexpr (std::is_same_v<T, VUnit>) {
                os << "()";
            } else if constexpr (std::is_same_v<T, VLam>) {
                paren(os, lv > E_FULL, [&] {
                    os << "lambda ";
                    if (n.mult == Mult::Lin) os << "lin ";
                    os << "(" << n.binder.str() << " : ";
                    pt(os, n.annot, T_FULL);
                    os << ") ";
                    pe(os, n.body, E_FULL);
                });
            } else if constexpr (std::is_same_v<T, VPair>) {
                os << "<" << n.binder.str();
                if (n.annot) {
                    os << " : ";
                    pt(os, n.annot, T_FULL);
                }
                os << " = ";
                pv(os, n.fst, E_FULL);
                os << ", ";
                pv(os, n.snd, E_FULL);
                os << ">";
            } else if constexpr (std::is_same_v<T, VSend>) {
                paren(os, lv > E_APP, [&] {
                    os << "send ";
                    pv(os, n.chan, E_ATOM);
                });
            } else if constexpr (std::is_same_v<T, VZero>) {
                os << "Z";
            } else if constexpr (std::is_same_v<T, VSucc>) {
                os << "S(";
                pv(os, n.pred, E_FULL);
                os << ")";
            } else if constexpr (std::is_same_v<T, VInt>) {
                if (n.value < 0 && lv >= E_APP) {
                    os << "(" << n.value << ")";
                } else {
                    os << n.value;
                }
            }
        },
        v->node);
}

void pe(std::ostream& os, const ExprRef& e, ELevel lv) {
    std::visit(
        [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, EVal>) {
                pv(os, n.val, lv);
            } else if constexpr (std::is_same_v<T, ECase>) {
                os << "case ";
                pv(os, n.scrutinee, E_ATOM);
                os << " of {";
                bool first = true;
                for (const auto& [l, b] : n.branches) {
                    if (!first) os << ",";
                    first = false;
                    os << " " << l.str() << ": ";
                    pe(os, b, E_FULL);
                }
                os << " }";
            } else if constexpr (std::is_same_v<T, EApp>) {
                paren(os, lv > E_APP, [&] {
                    pe(os, n.fn, E_APP);
                    os << " ";
                    pe(os, n.arg, E_ATOM);
                });
            } else if constexpr (std::is_same_v<T, EPair>) {
                os << "<" << n.binder.str();
                if (n.annot) {
                    os << " : ";
                    pt(os, n.annot, T_FULL);
                }
                os << " = ";
                pv(os, n.fst, E_FULL);
                os << ", ";
                pe(os, n.snd, E_FULL);
                os << ">";
            } else if constexpr (std::is_same_v<T, ELetPair>) {
                paren(os, lv > E_FULL, [&] {
                    os << "let (" << n.fst.str() << ", " << n.snd.str() << ") = ";
                    pe(os, n.scrutinee, E_FULL);
                    os << " in ";
                    pe(os, n.body, E_FULL);
                });
            } else if constexpr (std::is_same_v<T, ELet>) {
                paren(os, lv > E_FULL, [&] {
                    os << "let " << n.binder.str() << " = ";
                    pe(os, n.bound, E_FULL);
                    os << " in ";
                    pe(os, n.body, E_FULL);
                });
            } else if constexpr (std::is_same_v<T, ENew>) {
                paren(os, lv > E_APP, [&] {
                    os << "new ";
                    pt(os, n.session, T_ATOM);
                });
            } else if constexpr (std::is_same_v<T, EFork>) {
                paren(os, lv > E_APP, [&] {
                    os << "fork ";
                    pe(os, n.body, E_ATOM);
                });
            } else if constexpr (std::is_same_v<T, ESend>) {
                paren(os, lv > E_APP, [&] {
                    os << "send ";
                    pe(os, n.chan, E_ATOM);
                });
            } else if constexpr (std::is_same_v<T, ERecv>) {
                paren(os, lv > E_APP, [&] {
                    os << "recv ";
                    pe(os, n.chan, E_ATOM);
                });
            } else if constexpr (std::is_same_v<T, ENatRec>) {
                os << "natrec ";
                pv(os, n.scrutinee, E_ATOM);
                if (n.motive) {
                    os << " : ";
                    pt(os, n.motive, T_FULL);
                }
                os << " { Z: ";
                pe(os, n.zero, E_FULL);
                os << ", S(" << n.pred_var.str() << ") with [" << n.tyvar.str() << "]("
                   << n.rec_var.str() << " : ";
                pt(os, n.rec_annot, T_FULL);
                os << "): ";
                pe(os, n.succ, E_FULL);
                os << " }";
            } else if constexpr (std::is_same_v<T, ENeg>) {
                paren(os, lv > E_APP, [&] {
                    os << "-";
                    pe(os, n.arg, E_ATOM);
                });
            } else if constexpr (std::is_same_v<T, EAdd>) {
                paren(os, lv > E_ADD, [&] {
                    pe(os, n.lhs, E_ADD);
                    os << " + ";
                    pe(os, n.rhs, E_APP);
                });
            }
        },
        e->node);
}

void pp(std::ostream& os, const ProcessRef& p) {
    std::visit(
        [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, PExpr>) {
                os << "<";
                pe(os, n.body, E_FULL);
                os << ">";
            } else if constexpr (std::is_same_v<T, PPar>) {
                os << "(";
                pp(os, n.left);
                os << " || ";
                pp(os, n.right);
                os << ")";
            } else {
                os << "nu " << n.left.str() << " " << n.right.str();
                if (n.session) {
                    os << " : ";
                    pt(os, n.session, T_FULL);
                }
                os << ". ";
                pp(os, n.body);
            }
        },
        p->node);
}

} // namespace

std::string print_type(const TypeRef& t) {
    std::ostringstream os;
    pt(os, t, T_FULL);
    return os.str();
}

std::string print_value(const ValueRef& v) {
    std::ostringstream os;
    pv(os, v, E_FULL);
    return os.str();
}

std::string print_expr(const ExprRef& e) {
    std::ostringstream os;
    pe(os, e, E_FULL);
    return os.str();
}

std::string print_process(const ProcessRef& p) {
    std::ostringstream os;
    pp(os, p);
    return os.str();
}

} // namespace ldst
