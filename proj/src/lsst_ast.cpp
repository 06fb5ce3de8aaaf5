#include "ldst/lsst_ast.hpp"

#include <algorithm>
#include <sstream>

namespace ldst::lsst {

namespace {
template <typename N> LTypeRef mk(N&& n) {
    return std::make_shared<const LType>(LType{std::forward<N>(n), {}});
}
void sort_bs(std::vector<std::pair<Label, LTypeRef>>& bs) {
    std::sort(bs.begin(), bs.end(),
              [](const auto& a, const auto& b) { return a.first.str() < b.first.str(); });
}
} // namespace

LTypeRef lt_unit() { static LTypeRef t = mk(LUnit{}); return t; }
LTypeRef lt_int() { static LTypeRef t = mk(LInt{}); return t; }
LTypeRef lt_fun(Mult m, LTypeRef dom, LTypeRef cod) {
    return mk(LFun{m, std::move(dom), std::move(cod)});
}
LTypeRef lt_prod(LTypeRef fst, LTypeRef snd) { return mk(LProd{std::move(fst), std::move(snd)}); }
LTypeRef lt_send(LTypeRef payload, LTypeRef cont) {
    return mk(LSend{std::move(payload), std::move(cont)});
}
LTypeRef lt_recv(LTypeRef payload, LTypeRef cont) {
    return mk(LRecv{std::move(payload), std::move(cont)});
}
LTypeRef lt_select(std::vector<std::pair<Label, LTypeRef>> branches) {
    sort_bs(branches);
    return mk(LSelect{std::move(branches)});
}
LTypeRef lt_branch(std::vector<std::pair<Label, LTypeRef>> branches) {
    sort_bs(branches);
    return mk(LBranch{std::move(branches)});
}
LTypeRef lt_end_out() { static LTypeRef t = mk(LEndOut{}); return t; }
LTypeRef lt_end_in() { static LTypeRef t = mk(LEndIn{}); return t; }

LExprRef lx(LExpr e) { return std::make_shared<const LExpr>(std::move(e)); }

bool lsst_is_session(const LTypeRef& t) {
    return std::visit(
        [](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            return std::is_same_v<T, LSend> || std::is_same_v<T, LRecv> ||
                   std::is_same_v<T, LSelect> || std::is_same_v<T, LBranch> ||
                   std::is_same_v<T, LEndOut> || std::is_same_v<T, LEndIn>;
        },
        t->node);
}

LTypeRef lsst_dual(const LTypeRef& t) {
    return std::visit(
        [&](const auto& n) -> LTypeRef {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, LSend>) {
                return lt_recv(n.payload, lsst_dual(n.cont));
            } else if constexpr (std::is_same_v<T, LRecv>) {
                return lt_send(n.payload, lsst_dual(n.cont));
            } else if constexpr (std::is_same_v<T, LSelect>) {
                auto bs = n.branches;
                for (auto& [l, b] : bs) b = lsst_dual(b);
                return lt_branch(std::move(bs));
            } else if constexpr (std::is_same_v<T, LBranch>) {
                auto bs = n.branches;
                for (auto& [l, b] : bs) b = lsst_dual(b);
                return lt_select(std::move(bs));
            } else if constexpr (std::is_same_v<T, LEndOut>) {
                return lt_end_in();
            } else if constexpr (std::is_same_v<T, LEndIn>) {
                return lt_end_out();
            } else {
                throw Error(ErrCode::NotASessionType, "dual applied outside the session fragment",
                            t->pos);
            }
        },
        t->node);
}

bool lsst_type_eq(const LTypeRef& a, const LTypeRef& b) {
    return lsst_sub(a, b) && lsst_sub(b, a);
}

bool lsst_sub(const LTypeRef& a, const LTypeRef& b) {
    if (a.get() == b.get()) return true;
    if (a->node.index() != b->node.index()) return false;
    return std::visit(
        [&](const auto& na) -> bool {
            using T = std::decay_t<decltype(na)>;
            const auto& nb = std::get<T>(b->node);
            if constexpr (std::is_same_v<T, LUnit> || std::is_same_v<T, LInt> ||
                          std::is_same_v<T, LEndOut> || std::is_same_v<T, LEndIn>) {
                return true;
            } else if constexpr (std::is_same_v<T, LFun>) {
                return mult_le(na.mult, nb.mult) && lsst_sub(nb.dom, na.dom) &&
                       lsst_sub(na.cod, nb.cod);
            } else if constexpr (std::is_same_v<T, LProd>) {
                return lsst_sub(na.fst, nb.fst) && lsst_sub(na.snd, nb.snd);
            } else if constexpr (std::is_same_v<T, LSend>) {
                return lsst_sub(nb.payload, na.payload) && lsst_sub(na.cont, nb.cont);
            } else if constexpr (std::is_same_v<T, LRecv>) {
                return lsst_sub(na.payload, nb.payload) && lsst_sub(na.cont, nb.cont);
            } else if constexpr (std::is_same_v<T, LSelect>) {
                // supertype selects fewer branches
                for (const auto& [l, sb] : nb.branches) {
                    auto it = std::find_if(na.branches.begin(), na.branches.end(),
                                           [&, lab = l](const auto& p) { return p.first == lab; });
                    if (it == na.branches.end() || !lsst_sub(it->second, sb)) return false;
                }
                return true;
            } else if constexpr (std::is_same_v<T, LBranch>) {
                // supertype offers more branches
                for (const auto& [l, sb] : na.branches) {
                    auto it = std::find_if(nb.branches.begin(), nb.branches.end(),
                                           [&, lab = l](const auto& p) { return p.first == lab; });
                    if (it == nb.branches.end() || !lsst_sub(sb, it->second)) return false;
                }
                return true;
            } else {
                return false;
            }
        },
        a->node);
}

Mult lsst_mult(const LTypeRef& t) {
    return std::visit(
        [&](const auto& n) -> Mult {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, LUnit> || std::is_same_v<T, LInt>) {
                return Mult::Un;
            } else if constexpr (std::is_same_v<T, LFun>) {
                return n.mult;
            } else if constexpr (std::is_same_v<T, LProd>) {
                return mult_join(lsst_mult(n.fst), lsst_mult(n.snd));
            } else {
                return Mult::Lin; // session types are always linear
            }
        },
        t->node);
}

namespace {
void pr(std::ostream& os, const LTypeRef& t, int lv) {
    std::visit(
        [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, LUnit>) {
                os << "Unit";
            } else if constexpr (std::is_same_v<T, LInt>) {
                os << "Int";
            } else if constexpr (std::is_same_v<T, LFun>) {
                if (lv > 0) os << "(";
                pr(os, n.dom, 1);
                os << (n.mult == Mult::Un ? " -> " : " -o ");
                pr(os, n.cod, 0);
                if (lv > 0) os << ")";
            } else if constexpr (std::is_same_v<T, LProd>) {
                if (lv > 1) os << "(";
                pr(os, n.fst, 2);
                os << " * ";
                pr(os, n.snd, 1);
                if (lv > 1) os << ")";
            } else if constexpr (std::is_same_v<T, LSend>) {
                if (lv > 2) os << "(";
                os << "!";
                pr(os, n.payload, 3);
                os << ". ";
                pr(os, n.cont, 2);
                if (lv > 2) os << ")";
            } else if constexpr (std::is_same_v<T, LRecv>) {
                if (lv > 2) os << "(";
                os << "?";
                pr(os, n.payload, 3);
                os << ". ";
                pr(os, n.cont, 2);
                if (lv > 2) os << ")";
            } else if constexpr (std::is_same_v<T, LSelect> || std::is_same_v<T, LBranch>) {
                os << (std::is_same_v<T, LSelect> ? "(+){" : "&{");
                bool first = true;
                for (const auto& [l, b] : n.branches) {
                    if (!first) os << ",";
                    first = false;
                    os << " " << l.str() << ": ";
                    pr(os, b, 0);
                }
                os << " }";
            } else if constexpr (std::is_same_v<T, LEndOut>) {
                os << "end!";
            } else if constexpr (std::is_same_v<T, LEndIn>) {
                os << "end?";
            }
        },
        t->node);
}
} // namespace

std::string print_ltype(const LTypeRef& t) {
    std::ostringstream os;
    pr(os, t, 0);
    return os.str();
}

} // namespace ldst::lsst
