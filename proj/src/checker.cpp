#include "ldst/checker.hpp"

#include <algorithm>
#include <functional>
#include <set>

#include <nlohmann/json.hpp>

#include "ldst/pretty.hpp"

namespace ldst {

struct Checker::Rule {
    Checker& c;
    Rule(Checker& chk, std::string name) : c(chk) { c.trace_.push_back(std::move(name)); }
    ~Rule() { c.trace_.pop_back(); }
};

Checker::Checker(CheckOptions opts) : opts_(opts) {}

void Checker::fail(ErrCode code, const std::string& msg, SourcePos pos) {
    std::vector<std::string> tr = trace_;
    if (tr.empty()) tr.push_back("toplevel");
    throw Error(code, msg, pos, std::move(tr));
}

KindOracle Checker::kind_oracle(const TypeEnv& env) {
    return [this, env](const TypeRef& t) { return kind_synth(env, t); };
}

TypeEnv Checker::unrestricted(const TypeEnv& env) { return env.unr(kind_oracle(env)); }

// ---------------------------------------------------------------------------
// Value conversion
// ---------------------------------------------------------------------------

namespace {
bool is_head_form(const ValueRef& v) {
    return std::visit(
        [](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            return std::is_same_v<T, VLabel> || std::is_same_v<T, VZero> ||
                   std::is_same_v<T, VSucc> || std::is_same_v<T, VUnit> ||
                   std::is_same_v<T, VInt>;
        },
        v->node);
}
} // namespace

std::optional<ValueRef> Checker::convert_value(const TypeEnv& env, const ValueRef& v) {
    if (is_head_form(v)) return v; // AC-Refl
    ValueRef cur = v;
    std::set<Name> visited;
    while (const auto* var = std::get_if<VVar>(&cur->node)) {
        if (!visited.insert(var->name).second) return std::nullopt;
        auto eq = env.equation_for(var->name); // AC-Ass
        if (!eq) return std::nullopt;
        cur = *eq;
        if (is_head_form(cur)) return cur;
    }
    return is_head_form(cur) ? std::optional<ValueRef>(cur) : std::nullopt;
}

// ---------------------------------------------------------------------------
// Unfolding
// ---------------------------------------------------------------------------

void Checker::spend_fuel(const std::string& where) {
    if (--fuel_ < 0) fail(ErrCode::FuelExhausted, "recursor unrolling exceeded fuel in " + where);
}

TypeRef Checker::unroll_natrec_succ(const TNatRec& r, const ValueRef& pred) {
    TypeRef at_pred = t_natrec(pred, r.zero, r.rec_var, r.kind, r.succ);
    return subst_tvar(r.succ, r.rec_var, at_pred);
}

TypeRef Checker::unfold(const TypeEnv& env, const TypeRef& t) {
    fuel_ = opts_.natrec_fuel;
    return unfold_with_fuel(env, t);
}

TypeRef Checker::unfold_with_fuel(const TypeEnv& env, const TypeRef& t) {
    if (const auto* c = std::get_if<TCase>(&t->node)) {
        Rule r(*this, "A-Unfold-Case");
        if (auto head = convert_value(env, c->scrutinee)) {
            if (const auto* lab = std::get_if<VLabel>(&(*head)->node)) {
                for (const auto& [l, b] : c->branches)
                    if (l == lab->lab) return unfold_with_fuel(env, b);
                fail(ErrCode::UnfoldFailed,
                     "label " + lab->lab.str() + " not covered by case type", t->pos);
            }
        }
        // scrutinee stays abstract: unfold branches, then merge or commute
        std::vector<std::pair<Label, TypeRef>> ub;
        ub.reserve(c->branches.size());
        for (const auto& [l, b] : c->branches) ub.emplace_back(l, unfold_with_fuel(env, b));

        bool all_label = true;
        for (const auto& [l, b] : ub)
            if (!std::holds_alternative<TLabel>(b->node)) all_label = false;
        if (all_label) { // A-Unfold-Case1
            LabelSet merged;
            for (const auto& [l, b] : ub) merged = merged.unite(std::get<TLabel>(b->node).set);
            return t_label(merged);
        }

        size_t idx = ub.front().second->node.index();
        for (const auto& [l, b] : ub) {
            if (b->node.index() != idx)
                fail(ErrCode::UnfoldFailed, "case branches expose different type constructors",
                     t->pos);
        }
        const TypeRef& first = ub.front().second;
        // A-Unfold-Case2: commute the common constructor out of all branches.
        // The left component (payload/domain) collapses when all branches
        // agree; otherwise it stays a case as well.
        auto commute = [&](const std::function<Name(const TypeRef&)>& binder_of,
                           const std::function<TypeRef(const TypeRef&)>& left_of,
                           const std::function<TypeRef(const TypeRef&)>& right_of,
                           const std::function<TypeRef(Name, TypeRef, TypeRef)>& rebuild) {
            Name common = fresh(binder_of(first));
            std::vector<std::pair<Label, TypeRef>> lefts, rights;
            bool lefts_equal = true;
            for (const auto& [l, b] : ub) {
                TypeRef lt = left_of(b);
                TypeRef rt = subst_type(right_of(b), binder_of(b), v_var(common));
                if (!lefts.empty() && !alpha_eq(lefts.front().second, lt)) lefts_equal = false;
                lefts.emplace_back(l, lt);
                rights.emplace_back(l, rt);
            }
            TypeRef lt = lefts_equal ? lefts.front().second : t_case(c->scrutinee, std::move(lefts));
            TypeRef rt = t_case(c->scrutinee, std::move(rights));
            return rebuild(common, lt, rt);
        };

        if (std::holds_alternative<TSend>(first->node)) {
            return commute([](const TypeRef& b) { return std::get<TSend>(b->node).binder; },
                           [](const TypeRef& b) { return std::get<TSend>(b->node).payload; },
                           [](const TypeRef& b) { return std::get<TSend>(b->node).cont; },
                           [](Name b, TypeRef p, TypeRef k) { return t_send(b, p, k); });
        }
        if (std::holds_alternative<TRecv>(first->node)) {
            return commute([](const TypeRef& b) { return std::get<TRecv>(b->node).binder; },
                           [](const TypeRef& b) { return std::get<TRecv>(b->node).payload; },
                           [](const TypeRef& b) { return std::get<TRecv>(b->node).cont; },
                           [](Name b, TypeRef p, TypeRef k) { return t_recv(b, p, k); });
        }
        if (std::holds_alternative<TSigma>(first->node)) {
            return commute([](const TypeRef& b) { return std::get<TSigma>(b->node).binder; },
                           [](const TypeRef& b) { return std::get<TSigma>(b->node).fst; },
                           [](const TypeRef& b) { return std::get<TSigma>(b->node).snd; },
                           [](Name b, TypeRef p, TypeRef k) { return t_sigma(b, p, k); });
        }
        if (const auto* pi0 = std::get_if<TPi>(&first->node)) {
            Mult m = pi0->mult;
            for (const auto& [l, b] : ub)
                if (std::get<TPi>(b->node).mult != m)
                    fail(ErrCode::UnfoldFailed, "case branches disagree on multiplicity", t->pos);
            return commute([](const TypeRef& b) { return std::get<TPi>(b->node).binder; },
                           [](const TypeRef& b) { return std::get<TPi>(b->node).dom; },
                           [](const TypeRef& b) { return std::get<TPi>(b->node).cod; },
                           [m](Name b, TypeRef p, TypeRef k) { return t_pi(m, b, p, k); });
        }
        if (std::holds_alternative<TUnit>(first->node) || std::holds_alternative<TEnd>(first->node) ||
            std::holds_alternative<TNat>(first->node) || std::holds_alternative<TInt>(first->node)) {
            return first;
        }
        if (const auto* tv0 = std::get_if<TVar>(&first->node)) {
            for (const auto& [l, b] : ub) {
                const auto& tv = std::get<TVar>(b->node);
                if (tv.name != tv0->name || tv.pol != tv0->pol)
                    fail(ErrCode::UnfoldFailed, "case branches expose different type variables",
                         t->pos);
            }
            return first;
        }
        fail(ErrCode::UnfoldFailed, "case branches cannot be commuted", t->pos);
    }
    if (const auto* r = std::get_if<TNatRec>(&t->node)) {
        Rule rr(*this, "A-Unfold-Rec");
        if (auto head = convert_value(env, r->scrutinee)) {
            if (std::holds_alternative<VZero>((*head)->node)) {
                return unfold_with_fuel(env, r->zero); // A-Unfold-Rec-Z
            }
            if (const auto* s = std::get_if<VSucc>(&(*head)->node)) {
                spend_fuel("unfold"); // A-Unfold-Rec-S
                return unfold_with_fuel(env, unroll_natrec_succ(*r, s->pred));
            }
        }
        // A-Unfold-Rec-X: the scrutinee stays abstract.
        TypeRef uz = unfold_with_fuel(env, r->zero);
        TypeRef us = unfold_with_fuel(env, r->succ);
        if (alpha_eq(uz, us) && !tvar_occurs(us, r->rec_var)) return uz;
        if (std::holds_alternative<TLabel>(uz->node) && std::holds_alternative<TLabel>(us->node)) {
            return t_label(std::get<TLabel>(uz->node).set.unite(std::get<TLabel>(us->node).set));
        }
        if (uz->node.index() == us->node.index()) {
            auto mk_component = [&](const TypeRef& z, const TypeRef& s) {
                TypeRef comp = t_natrec(r->scrutinee, z, r->rec_var, r->kind, s);
                return unfold_with_fuel(env, comp);
            };
            if (const auto* sz = std::get_if<TSend>(&uz->node)) {
                const auto& ss = std::get<TSend>(us->node);
                Name b = fresh(sz->binder);
                return t_send(b, mk_component(sz->payload, ss.payload),
                              mk_component(subst_type(sz->cont, sz->binder, v_var(b)),
                                           subst_type(ss.cont, ss.binder, v_var(b))));
            }
            if (const auto* rz = std::get_if<TRecv>(&uz->node)) {
                const auto& rs = std::get<TRecv>(us->node);
                Name b = fresh(rz->binder);
                return t_recv(b, mk_component(rz->payload, rs.payload),
                              mk_component(subst_type(rz->cont, rz->binder, v_var(b)),
                                           subst_type(rs.cont, rs.binder, v_var(b))));
            }
            if (const auto* pz = std::get_if<TPi>(&uz->node)) {
                const auto& ps = std::get<TPi>(us->node);
                if (pz->mult == ps.mult) {
                    Name b = fresh(pz->binder);
                    return t_pi(pz->mult, b, mk_component(pz->dom, ps.dom),
                                mk_component(subst_type(pz->cod, pz->binder, v_var(b)),
                                             subst_type(ps.cod, ps.binder, v_var(b))));
                }
            }
            if (const auto* gz = std::get_if<TSigma>(&uz->node)) {
                const auto& gs = std::get<TSigma>(us->node);
                Name b = fresh(gz->binder);
                return t_sigma(b, mk_component(gz->fst, gs.fst),
                               mk_component(subst_type(gz->snd, gz->binder, v_var(b)),
                                            subst_type(gs.snd, gs.binder, v_var(b))));
            }
        }
        // Not reducible and not commutable: already a stable head.
        return t_natrec(r->scrutinee, uz, r->rec_var, r->kind, us);
    }
    return t; // A-Unfold-Refl
}

// ---------------------------------------------------------------------------
// Kinding
// ---------------------------------------------------------------------------

LabelSet Checker::scrutinee_label_set(const TypeEnv& env, const ValueRef& v) {
    if (const auto* lab = std::get_if<VLabel>(&v->node)) {
        return LabelSet({lab->lab});
    }
    const auto* var = std::get_if<VVar>(&v->node);
    if (!var)
        fail(ErrCode::KindMismatch, "case scrutinee is not a label or variable", v->pos);
    auto ty = env.lookup(var->name);
    if (!ty) fail(ErrCode::UnboundName, "unbound case scrutinee " + var->name.str(), v->pos);
    TypeRef head = unfold(env, *ty);
    const auto* lt = std::get_if<TLabel>(&head->node);
    if (!lt)
        fail(ErrCode::KindMismatch,
             "case scrutinee " + var->name.str() + " has non-label type " + print_type(*ty),
             v->pos);
    return lt->set;
}

Kind Checker::kind_synth(const TypeEnv& env, const TypeRef& t) {
    return std::visit(
        [&](const auto& n) -> Kind {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, TUnit>) {
                return Kind::un_session();
            } else if constexpr (std::is_same_v<T, TEnd>) {
                return Kind::un_session();
            } else if constexpr (std::is_same_v<T, TInt> || std::is_same_v<T, TNat> ||
                                 std::is_same_v<T, TLabel>) {
                return Kind::un_general();
            } else if constexpr (std::is_same_v<T, TEq>) {
                Rule r(*this, "A-Eq-F");
                SynthResult lhs = synth_value(env, n.lhs);
                sub_synth(env, lhs.type, n.index);
                SynthResult rhs = synth_value(env, n.rhs);
                sub_synth(env, rhs.type, n.index);
                return Kind::un_general();
            } else if constexpr (std::is_same_v<T, TCase>) {
                Rule r(*this, "A-Lab-E'");
                if (auto head = convert_value(env, n.scrutinee)) {
                    if (const auto* lab = std::get_if<VLabel>(&(*head)->node)) {
                        for (const auto& [l, b] : n.branches)
                            if (l == lab->lab) return kind_synth(env, b);
                        fail(ErrCode::KindMismatch,
                             "case type lacks branch " + lab->lab.str(), t->pos);
                    }
                }
                LabelSet ls = scrutinee_label_set(env, n.scrutinee);
                Kind k = Kind::un_session();
                bool first = true;
                for (Label l : ls.labels()) {
                    auto it = std::find_if(n.branches.begin(), n.branches.end(),
                                           [&](const auto& p) { return p.first == l; });
                    if (it == n.branches.end())
                        fail(ErrCode::KindMismatch, "case type lacks branch " + l.str(), t->pos);
                    TypeEnv env2 = env.bind(fresh("eq"),
                                            t_eq(t_label(ls), n.scrutinee, v_label(l)));
                    Kind kb = kind_synth(env2, it->second);
                    k = first ? kb : kind_join(k, kb);
                    first = false;
                }
                return k;
            } else if constexpr (std::is_same_v<T, TPi>) {
                Rule r(*this, "A-Pi-F");
                kind_synth(env, n.dom);
                TypeEnv env2 = cond_extend(env, n.binder, n.dom);
                kind_synth(env2, n.cod);
                return Kind{KindBase::General, n.mult};
            } else if constexpr (std::is_same_v<T, TSigma>) {
                Rule r(*this, "A-Sigma-F");
                Kind k1 = kind_synth(env, n.fst);
                TypeEnv env2 = cond_extend(env, n.binder, n.fst);
                Kind k2 = kind_synth(env2, n.snd);
                return kind_join(k1, k2);
            } else if constexpr (std::is_same_v<T, TSend> || std::is_same_v<T, TRecv>) {
                Rule r(*this, std::is_same_v<T, TSend> ? "A-Ssn-Out-F" : "A-Ssn-In-F");
                kind_synth(env, n.payload);
                TypeEnv env2 = cond_extend(env, n.binder, n.payload);
                Kind kc = kind_synth(env2, n.cont);
                if (kc.base != KindBase::Session)
                    fail(ErrCode::KindMismatch,
                         "session continuation has non-session kind " + kind_to_string(kc),
                         t->pos);
                return Kind::lin_session();
            } else if constexpr (std::is_same_v<T, TNatRec>) {
                Rule r(*this, "A-Rec-F");
                SynthResult scrut = synth_value(env, n.scrutinee);
                sub_synth(env, scrut.type, t_nat());
                Kind k = kind_synth(env, n.zero);
                for (int i = 0; i < 4; ++i) {
                    TypeEnv env2 = env.bind_tyvar(n.rec_var, k);
                    Kind ks = kind_synth(env2, n.succ);
                    Kind joined = kind_join(k, ks);
                    if (joined == k) break;
                    k = joined;
                }
                return k;
            } else if constexpr (std::is_same_v<T, TVar>) {
                auto k = env.lookup_tyvar(n.name);
                if (!k) fail(ErrCode::UnboundName, "unbound type variable " + n.name.str(), t->pos);
                return *k;
            } else {
                fail(ErrCode::KindMismatch, "unkindable type", t->pos);
            }
        },
        t->node);
}

void Checker::kind_check(const TypeEnv& env, const TypeRef& t, Kind k) {
    Rule r(*this, "A-Sub-Kind");
    Kind k2 = kind_synth(env, t);
    if (!kind_le(k2, k))
        fail(ErrCode::KindMismatch,
             "type " + print_type(t) + " has kind " + kind_to_string(k2) + ", expected " +
                 kind_to_string(k),
             t->pos);
}

TypeEnv Checker::cond_extend(const TypeEnv& env, Name x, const TypeRef& t) {
    return kind_synth(env, t).mult == Mult::Un ? env.bind(x, t) : env;
}

// ---------------------------------------------------------------------------
// Subtyping
// ---------------------------------------------------------------------------

bool Checker::tvars_synced(Name a, Name b) const {
    for (auto it = tvar_sync_.rbegin(); it != tvar_sync_.rend(); ++it) {
        if (it->first == a || it->second == b) return it->first == a && it->second == b;
    }
    return a == b;
}

Kind Checker::sub_synth(const TypeEnv& env, const TypeRef& a, const TypeRef& b) {
    fuel_ = opts_.natrec_fuel;
    return sub_dispatch(env, a, b);
}

void Checker::sub_check(const TypeEnv& env, const TypeRef& a, const TypeRef& b, Kind k) {
    Rule r(*this, "AS-Check");
    Kind k2 = sub_synth(env, a, b);
    if (!kind_le(k2, k))
        fail(ErrCode::KindMismatch,
             "subtyping holds at kind " + kind_to_string(k2) + " but " + kind_to_string(k) +
                 " was required",
             a->pos);
}

Kind Checker::sub_dispatch(const TypeEnv& env, const TypeRef& a, const TypeRef& b) {
    // case on the left
    if (const auto* ca = std::get_if<TCase>(&a->node)) {
        if (auto head = convert_value(env, ca->scrutinee)) {
            if (const auto* lab = std::get_if<VLabel>(&(*head)->node)) {
                Rule r(*this, "AS-Case-Left1");
                for (const auto& [l, br] : ca->branches)
                    if (l == lab->lab) return sub_dispatch(env, br, b);
                fail(ErrCode::NotASubtype, "case lacks branch " + lab->lab.str(), a->pos);
            }
        }
        Rule r(*this, "AS-Case-Left2");
        LabelSet ls = scrutinee_label_set(env, ca->scrutinee);
        Kind k = Kind::un_session();
        bool first = true;
        for (Label l : ls.labels()) {
            auto it = std::find_if(ca->branches.begin(), ca->branches.end(),
                                   [&](const auto& p) { return p.first == l; });
            if (it == ca->branches.end())
                fail(ErrCode::NotASubtype, "case lacks branch " + l.str(), a->pos);
            TypeEnv env2 = env.bind(fresh("eq"), t_eq(t_label(ls), ca->scrutinee, v_label(l)));
            Kind kb = sub_dispatch(env2, it->second, b);
            k = first ? kb : kind_join(k, kb);
            first = false;
        }
        return k;
    }
    // case on the right
    if (const auto* cb = std::get_if<TCase>(&b->node)) {
        if (auto head = convert_value(env, cb->scrutinee)) {
            if (const auto* lab = std::get_if<VLabel>(&(*head)->node)) {
                Rule r(*this, "AS-Case-Right1");
                for (const auto& [l, br] : cb->branches)
                    if (l == lab->lab) return sub_dispatch(env, a, br);
                fail(ErrCode::NotASubtype, "case lacks branch " + lab->lab.str(), b->pos);
            }
        }
        Rule r(*this, "AS-Case-Right2");
        LabelSet ls = scrutinee_label_set(env, cb->scrutinee);
        Kind k = Kind::un_session();
        bool first = true;
        for (Label l : ls.labels()) {
            auto it = std::find_if(cb->branches.begin(), cb->branches.end(),
                                   [&](const auto& p) { return p.first == l; });
            if (it == cb->branches.end())
                fail(ErrCode::NotASubtype, "case lacks branch " + l.str(), b->pos);
            TypeEnv env2 = env.bind(fresh("eq"), t_eq(t_label(ls), cb->scrutinee, v_label(l)));
            Kind kb = sub_dispatch(env2, a, it->second);
            k = first ? kb : kind_join(k, kb);
            first = false;
        }
        return k;
    }
    // recursor on the left
    if (const auto* ra = std::get_if<TNatRec>(&a->node)) {
        if (auto head = convert_value(env, ra->scrutinee)) {
            if (std::holds_alternative<VZero>((*head)->node)) {
                Rule r(*this, "AS-Rec-Left-Z");
                return sub_dispatch(env, ra->zero, b);
            }
            if (const auto* s = std::get_if<VSucc>(&(*head)->node)) {
                Rule r(*this, "AS-Rec-Left-S");
                spend_fuel("subtyping");
                return sub_dispatch(env, unroll_natrec_succ(*ra, s->pred), b);
            }
        }
        const auto* rb = std::get_if<TNatRec>(&b->node);
        if (rb) {
            if (auto headb = convert_value(env, rb->scrutinee)) {
                if (std::holds_alternative<VZero>((*headb)->node)) {
                    Rule r(*this, "AS-Rec-Right-Z");
                    return sub_dispatch(env, a, rb->zero);
                }
                if (const auto* s = std::get_if<VSucc>(&(*headb)->node)) {
                    Rule r(*this, "AS-Rec-Right-S");
                    spend_fuel("subtyping");
                    return sub_dispatch(env, a, unroll_natrec_succ(*rb, s->pred));
                }
            }
            Rule r(*this, "AS-Rec-Left-X");
            if (!alpha_eq(ra->scrutinee, rb->scrutinee))
                fail(ErrCode::NotASubtype, "recursor indices do not synchronize", a->pos);
            Kind kz = sub_dispatch(env, ra->zero, rb->zero);
            tvar_sync_.emplace_back(ra->rec_var, rb->rec_var);
            Kind ks;
            try {
                ks = sub_dispatch(env, ra->succ, rb->succ);
            } catch (...) {
                tvar_sync_.pop_back();
                throw;
            }
            tvar_sync_.pop_back();
            return kind_join(kz, ks);
        }
        fail(ErrCode::NotASubtype,
             "recursor over an abstract index compared against " + print_type(b), a->pos);
    }
    // recursor on the right
    if (const auto* rb = std::get_if<TNatRec>(&b->node)) {
        if (auto head = convert_value(env, rb->scrutinee)) {
            if (std::holds_alternative<VZero>((*head)->node)) {
                Rule r(*this, "AS-Rec-Right-Z");
                return sub_dispatch(env, a, rb->zero);
            }
            if (const auto* s = std::get_if<VSucc>(&(*head)->node)) {
                Rule r(*this, "AS-Rec-Right-S");
                spend_fuel("subtyping");
                return sub_dispatch(env, a, unroll_natrec_succ(*rb, s->pred));
            }
        }
        fail(ErrCode::NotASubtype,
             print_type(a) + " compared against a recursor over an abstract index", b->pos);
    }
    return sub_structural(env, a, b);
}

Kind Checker::sub_structural(const TypeEnv& env, const TypeRef& a, const TypeRef& b) {
    if (std::holds_alternative<TUnit>(a->node) && std::holds_alternative<TUnit>(b->node)) {
        Rule r(*this, "AS-Unit");
        return Kind::un_session();
    }
    if (std::holds_alternative<TEnd>(a->node) && std::holds_alternative<TEnd>(b->node)) {
        Rule r(*this, "AS-End");
        return Kind::un_session();
    }
    if (std::holds_alternative<TInt>(a->node) && std::holds_alternative<TInt>(b->node)) {
        return Kind::un_general();
    }
    if (std::holds_alternative<TNat>(a->node) && std::holds_alternative<TNat>(b->node)) {
        return Kind::un_general();
    }
    if (const auto* la = std::get_if<TLabel>(&a->node)) {
        if (const auto* lb = std::get_if<TLabel>(&b->node)) {
            Rule r(*this, "AS-Label");
            if (!la->set.subset_of(lb->set))
                fail(ErrCode::NotASubtype,
                     print_type(a) + " is not a subset of " + print_type(b), a->pos);
            return Kind::un_general();
        }
    }
    if (const auto* ea = std::get_if<TEq>(&a->node)) {
        if (const auto* eb = std::get_if<TEq>(&b->node)) {
            Rule r(*this, "AS-Eq");
            sub_dispatch(env, ea->index, eb->index);
            sub_dispatch(env, eb->index, ea->index);
            auto norm = [&](const ValueRef& v) {
                auto h = convert_value(env, v);
                return h ? *h : v;
            };
            if (!alpha_eq(norm(ea->lhs), norm(eb->lhs)) || !alpha_eq(norm(ea->rhs), norm(eb->rhs)))
                fail(ErrCode::NotASubtype, "equality types relate different values", a->pos);
            return Kind::un_general();
        }
    }
    if (const auto* pa = std::get_if<TPi>(&a->node)) {
        if (const auto* pb = std::get_if<TPi>(&b->node)) {
            Rule r(*this, "AS-Pi");
            if (!mult_le(pa->mult, pb->mult))
                fail(ErrCode::NotASubtype, "function multiplicities do not relate", a->pos);
            sub_dispatch(env, pb->dom, pa->dom);
            Name z = fresh(pb->binder);
            TypeEnv env2 = cond_extend(env, z, pb->dom);
            sub_dispatch(env2, subst_type(pa->cod, pa->binder, v_var(z)),
                         subst_type(pb->cod, pb->binder, v_var(z)));
            return Kind{KindBase::General, pb->mult};
        }
    }
    if (const auto* sa = std::get_if<TSigma>(&a->node)) {
        if (const auto* sb = std::get_if<TSigma>(&b->node)) {
            Rule r(*this, "AS-Sigma");
            Kind k1 = sub_dispatch(env, sa->fst, sb->fst);
            Name z = fresh(sa->binder);
            TypeEnv env2 = cond_extend(env, z, sa->fst);
            Kind k2 = sub_dispatch(env2, subst_type(sa->snd, sa->binder, v_var(z)),
                                   subst_type(sb->snd, sb->binder, v_var(z)));
            return kind_join(k1, k2);
        }
    }
    if (const auto* na = std::get_if<TSend>(&a->node)) {
        if (const auto* nb = std::get_if<TSend>(&b->node)) {
            Rule r(*this, "AS-Send");
            sub_dispatch(env, nb->payload, na->payload);
            Name z = fresh(nb->binder);
            TypeEnv env2 = cond_extend(env, z, nb->payload);
            Kind kc = sub_dispatch(env2, subst_type(na->cont, na->binder, v_var(z)),
                                   subst_type(nb->cont, nb->binder, v_var(z)));
            if (kc.base != KindBase::Session)
                fail(ErrCode::KindMismatch, "session continuation has non-session kind", a->pos);
            return Kind::lin_session();
        }
    }
    if (const auto* na = std::get_if<TRecv>(&a->node)) {
        if (const auto* nb = std::get_if<TRecv>(&b->node)) {
            Rule r(*this, "AS-Recv");
            sub_dispatch(env, na->payload, nb->payload);
            Name z = fresh(na->binder);
            TypeEnv env2 = cond_extend(env, z, na->payload);
            Kind kc = sub_dispatch(env2, subst_type(na->cont, na->binder, v_var(z)),
                                   subst_type(nb->cont, nb->binder, v_var(z)));
            if (kc.base != KindBase::Session)
                fail(ErrCode::KindMismatch, "session continuation has non-session kind", a->pos);
            return Kind::lin_session();
        }
    }
    if (const auto* va = std::get_if<TVar>(&a->node)) {
        if (const auto* vb = std::get_if<TVar>(&b->node)) {
            Rule r(*this, "AS-TVar");
            if (va->pol != vb->pol || !tvars_synced(va->name, vb->name))
                fail(ErrCode::NotASubtype, "type variables do not synchronize", a->pos);
            if (auto k = env.lookup_tyvar(va->name)) return *k;
            return Kind::lin_session();
        }
    }
    fail(ErrCode::NotASubtype, print_type(a) + " is not a subtype of " + print_type(b), a->pos);
}

// ---------------------------------------------------------------------------
// Expression typing
// ---------------------------------------------------------------------------

// Removes a local binding from an output environment. Unrestricted bindings
// are simply dropped; a linear leftover is a violation, except End which may
// be discarded with a lint.
TypeEnv Checker::drop_binding(const TypeEnv& env, Name x, SourcePos pos) {
    auto ty = env.lookup(x);
    if (!ty) return env; // already consumed
    Kind k = kind_synth(env, *ty);
    if (k.mult == Mult::Lin) {
        bool is_end = false;
        try {
            is_end = std::holds_alternative<TEnd>(unfold(env, *ty)->node);
        } catch (const Error&) {
        }
        if (!is_end)
            fail(ErrCode::LinearityViolation,
                 "linear binding " + x.str() + " : " + print_type(*ty) + " is not consumed", pos);
        lints_.push_back("discarded channel end " + x.str() + " of type End");
    }
    return env.consume(x);
}

void Checker::check_branch_envs_agree(const std::vector<TypeEnv>& envs,
                                      const std::vector<Label>& labels, SourcePos pos) {
    for (size_t i = 1; i < envs.size(); ++i) {
        if (!TypeEnv::same_bindings(envs[0], envs[i])) {
            // name the first differing binding
            std::string offender = "?";
            for (const auto& e : envs[0].entries()) {
                if (const auto* tb = std::get_if<TermBind>(&e.entry)) {
                    auto other = envs[i].lookup(tb->name);
                    if (!other || !alpha_eq(*other, tb->type)) {
                        offender = tb->name.str();
                        break;
                    }
                }
            }
            if (offender == "?") {
                for (const auto& e : envs[i].entries()) {
                    if (const auto* tb = std::get_if<TermBind>(&e.entry)) {
                        if (!envs[0].lookup(tb->name)) {
                            offender = tb->name.str();
                            break;
                        }
                    }
                }
            }
            fail(ErrCode::BranchEnvMismatch,
                 "branches " + labels[0].str() + " and " + labels[i].str() +
                     " use resources differently (first difference: " + offender + ")",
                 pos);
        }
    }
}

SynthResult Checker::synth_value(const TypeEnv& env, const ValueRef& v) {
    return std::visit(
        [&](const auto& n) -> SynthResult {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, VVar>) {
                Rule r(*this, "A-Name");
                auto ty = env.lookup(n.name);
                if (!ty) fail(ErrCode::UnboundName, "unbound name " + n.name.str(), v->pos);
                Kind k = kind_synth(env, *ty);
                TypeEnv out = k.mult == Mult::Lin ? env.consume(n.name) : env;
                return {*ty, out};
            } else if constexpr (std::is_same_v<T, VLabel>) {
                Rule r(*this, "A-Lab-I");
                return {t_label(LabelSet({n.lab})), env};
            } else if constexpr (std::is_same_v<T, VUnit>) {
                Rule r(*this, "A-Unit-I");
                return {t_unit(), env};
            } else if constexpr (std::is_same_v<T, VInt>) {
                return {t_int(), env};
            } else if constexpr (std::is_same_v<T, VZero>) {
                Rule r(*this, "A-Zero-I");
                return {t_nat(), env};
            } else if constexpr (std::is_same_v<T, VSucc>) {
                Rule r(*this, "A-Succ-I");
                SynthResult p = synth_value(env, n.pred);
                sub_synth(env, p.type, t_nat());
                return {t_nat(), p.out};
            } else if constexpr (std::is_same_v<T, VLam>) {
                Rule r(*this, "A-Pi-I");
                if (!n.annot)
                    fail(ErrCode::KindMismatch, "lambda parameter needs a type annotation", v->pos);
                Kind dom_kind = kind_synth(env, n.annot);
                TypeEnv env1 = env.bind(n.binder, n.annot);
                SynthResult body = type_synth(env1, n.body);
                TypeEnv out = body.out;
                if (dom_kind.mult == Mult::Lin) {
                    out = drop_binding(out, n.binder, v->pos);
                } else {
                    out = out.consume(n.binder);
                }
                if (n.mult == Mult::Un && !TypeEnv::same_bindings(out, env))
                    fail(ErrCode::LinearityViolation,
                         "unrestricted function consumes linear resources", v->pos);
                return {t_pi(n.mult, n.binder, n.annot, body.type), out};
            } else if constexpr (std::is_same_v<T, VPair>) {
                Rule r(*this, "A-Sigma-I");
                TypeRef annot = n.annot;
                SynthResult fst = synth_value(env, n.fst);
                if (annot) {
                    Kind ka = kind_synth(env, annot);
                    sub_check(fst.out, fst.type, annot, ka);
                } else {
                    annot = fst.type;
                }
                Kind k = kind_synth(fst.out, annot);
                TypeEnv env2 = fst.out;
                Name eq = fresh("eq");
                if (k.mult == Mult::Un) {
                    env2 = env2.bind(n.binder, annot).bind(eq, t_eq(annot, v_var(n.binder), n.fst));
                }
                SynthResult snd = synth_value(env2, n.snd);
                TypeEnv out = snd.out;
                if (k.mult == Mult::Un) {
                    if (out.bound(eq)) out = out.consume(eq);
                    out = drop_binding(out, n.binder, v->pos);
                }
                return {t_sigma(n.binder, annot, snd.type), out};
            } else if constexpr (std::is_same_v<T, VSend>) {
                Rule r(*this, "A-Ssn-Send-E");
                SynthResult chan = synth_value(env, n.chan);
                TypeRef head = unfold(chan.out, chan.type);
                const auto* s = std::get_if<TSend>(&head->node);
                if (!s)
                    fail(ErrCode::KindMismatch,
                         "send expects a channel of send type, got " + print_type(chan.type),
                         v->pos);
                return {t_pi(Mult::Lin, s->binder, s->payload, s->cont), chan.out};
            } else {
                fail(ErrCode::UnboundName, "channel literal outside a configuration", v->pos);
            }
        },
        v->node);
}

SynthResult Checker::type_synth(const TypeEnv& env, const ExprRef& e) {
    return std::visit(
        [&](const auto& n) -> SynthResult {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, EVal>) {
                return synth_value(env, n.val);
            } else if constexpr (std::is_same_v<T, ECase>) {
                return synth_case(env, n, nullptr);
            } else if constexpr (std::is_same_v<T, EApp>) {
                Rule r(*this, "A-Pi-E");
                SynthResult fn = type_synth(env, n.fn);
                TypeRef head = unfold(fn.out, fn.type);
                const auto* pi = std::get_if<TPi>(&head->node);
                if (!pi)
                    fail(ErrCode::KindMismatch,
                         "cannot apply a value of type " + print_type(fn.type), e->pos);
                SynthResult arg = type_synth(fn.out, n.arg);
                sub_synth(arg.out, arg.type, pi->dom);
                if (occurs_free(pi->cod, pi->binder)) {
                    auto argv = expr_to_value(n.arg);
                    if (!argv)
                        fail(ErrCode::ValueRestriction,
                             "argument of a dependent function must be a value", e->pos);
                    TypeRef cod = subst_type(pi->cod, pi->binder, *argv);
                    kind_synth(arg.out, cod);
                    return {cod, arg.out};
                }
                return {pi->cod, arg.out};
            } else if constexpr (std::is_same_v<T, EPair>) {
                Rule r(*this, "A-Sigma-I");
                TypeRef annot = n.annot;
                SynthResult fst = synth_value(env, n.fst);
                if (annot) {
                    sub_check(fst.out, fst.type, annot, kind_synth(env, annot));
                } else {
                    annot = fst.type;
                }
                Kind k = kind_synth(fst.out, annot);
                TypeEnv env2 = fst.out;
                Name eq = fresh("eq");
                if (k.mult == Mult::Un) {
                    env2 = env2.bind(n.binder, annot).bind(eq, t_eq(annot, v_var(n.binder), n.fst));
                }
                SynthResult snd = type_synth(env2, n.snd);
                TypeEnv out = snd.out;
                if (k.mult == Mult::Un) {
                    if (out.bound(eq)) out = out.consume(eq);
                    out = drop_binding(out, n.binder, e->pos);
                }
                return {t_sigma(n.binder, annot, snd.type), out};
            } else if constexpr (std::is_same_v<T, ELetPair>) {
                return synth_letpair(env, n, nullptr, e->pos);
            } else if constexpr (std::is_same_v<T, ELet>) {
                Rule r(*this, "A-Let");
                SynthResult bound = type_synth(env, n.bound);
                Kind k = kind_synth(bound.out, bound.type);
                TypeEnv env2 = bound.out.bind(n.binder, bound.type);
                Name eq = fresh("eq");
                auto bv = expr_to_value(n.bound);
                bool with_eq = bv.has_value() && k.mult == Mult::Un;
                if (with_eq)
                    env2 = env2.bind(eq, t_eq(bound.type, v_var(n.binder), *bv));
                SynthResult body = type_synth(env2, n.body);
                TypeEnv out = body.out;
                if (with_eq && out.bound(eq)) out = out.consume(eq);
                out = drop_binding(out, n.binder, e->pos);
                TypeRef result = body.type;
                if (occurs_free(result, n.binder)) {
                    if (bv) {
                        result = subst_type(result, n.binder, *bv);
                    } else {
                        fail(ErrCode::ValueRestriction,
                             "let-bound variable " + n.binder.str() +
                                 " escapes into the result type " + print_type(result),
                             e->pos);
                    }
                }
                return {result, out};
            } else if constexpr (std::is_same_v<T, ENew>) {
                Rule r(*this, "A-Ssn-I");
                if (!is_session(n.session))
                    fail(ErrCode::NotASessionType,
                         "new expects a session type, got " + print_type(n.session), e->pos);
                kind_check(env, n.session, Kind::lin_session());
                return {t_sigma(fresh("c"), n.session, dual(n.session)), env};
            } else if constexpr (std::is_same_v<T, EFork>) {
                Rule r(*this, "A-Fork");
                SynthResult body = type_synth(env, n.body);
                TypeRef head = unfold(body.out, body.type);
                if (!std::holds_alternative<TUnit>(head->node) &&
                    !std::holds_alternative<TEnd>(head->node))
                    fail(ErrCode::KindMismatch,
                         "forked thread must end at Unit or End, got " + print_type(body.type),
                         e->pos);
                return {t_unit(), body.out};
            } else if constexpr (std::is_same_v<T, ESend>) {
                Rule r(*this, "A-Ssn-Send-E");
                SynthResult chan = type_synth(env, n.chan);
                TypeRef head = unfold(chan.out, chan.type);
                const auto* s = std::get_if<TSend>(&head->node);
                if (!s)
                    fail(ErrCode::KindMismatch,
                         "send expects a channel of send type, got " + print_type(chan.type),
                         e->pos);
                return {t_pi(Mult::Lin, s->binder, s->payload, s->cont), chan.out};
            } else if constexpr (std::is_same_v<T, ERecv>) {
                Rule r(*this, "A-Ssn-Recv-E");
                SynthResult chan = type_synth(env, n.chan);
                TypeRef head = unfold(chan.out, chan.type);
                const auto* s = std::get_if<TRecv>(&head->node);
                if (!s)
                    fail(ErrCode::KindMismatch,
                         "recv expects a channel of receive type, got " + print_type(chan.type),
                         e->pos);
                return {t_sigma(s->binder, s->payload, s->cont), chan.out};
            } else if constexpr (std::is_same_v<T, ENatRec>) {
                return synth_natrec(env, n, e->pos);
            } else if constexpr (std::is_same_v<T, ENeg>) {
                Rule r(*this, "A-Neg");
                SynthResult arg = type_synth(env, n.arg);
                sub_synth(arg.out, arg.type, t_int());
                return {t_int(), arg.out};
            } else if constexpr (std::is_same_v<T, EAdd>) {
                Rule r(*this, "A-Add");
                SynthResult lhs = type_synth(env, n.lhs);
                sub_synth(lhs.out, lhs.type, t_int());
                SynthResult rhs = type_synth(lhs.out, n.rhs);
                sub_synth(rhs.out, rhs.type, t_int());
                return {t_int(), rhs.out};
            } else {
                fail(ErrCode::KindMismatch, "cannot synthesize", e->pos);
            }
        },
        e->node);
}

SynthResult Checker::synth_case(const TypeEnv& env, const ECase& c, const TypeRef* expected) {
    if (auto head = convert_value(env, c.scrutinee)) {
        if (const auto* lab = std::get_if<VLabel>(&(*head)->node)) {
            Rule r(*this, "A-Lab-E1");
            for (const auto& [l, branch] : c.branches) {
                if (l != lab->lab) continue;
                if (expected) {
                    TypeEnv out = type_check(env, branch, *expected);
                    return {*expected, out};
                }
                return type_synth(env, branch);
            }
            fail(ErrCode::KindMismatch, "case lacks branch " + lab->lab.str(),
                 c.scrutinee->pos);
        }
    }
    Rule r(*this, "A-Lab-E2");
    LabelSet ls = scrutinee_label_set(env, c.scrutinee);
    std::vector<TypeEnv> outs;
    std::vector<Label> labels;
    std::vector<TypeRef> types;
    for (Label l : ls.labels()) {
        auto it = std::find_if(c.branches.begin(), c.branches.end(),
                               [&](const auto& p) { return p.first == l; });
        if (it == c.branches.end())
            fail(ErrCode::KindMismatch, "case lacks branch " + l.str(), c.scrutinee->pos);
        Name eq = fresh("eq");
        TypeEnv env2 = env.bind(eq, t_eq(t_label(ls), c.scrutinee, v_label(l)));
        TypeEnv out;
        if (expected) {
            out = type_check(env2, it->second, *expected);
            types.push_back(*expected);
        } else {
            SynthResult res = type_synth(env2, it->second);
            out = res.out;
            types.push_back(res.type);
        }
        if (out.bound(eq)) out = out.consume(eq);
        outs.push_back(out);
        labels.push_back(l);
    }
    check_branch_envs_agree(outs, labels, c.scrutinee->pos);
    if (expected) return {*expected, outs.front()};
    bool all_same = true;
    for (size_t i = 1; i < types.size(); ++i)
        if (!alpha_eq(types[0], types[i])) all_same = false;
    if (all_same) return {types[0], outs.front()};
    std::vector<std::pair<Label, TypeRef>> branch_types;
    for (size_t i = 0; i < labels.size(); ++i) branch_types.emplace_back(labels[i], types[i]);
    return {t_case(c.scrutinee, std::move(branch_types)), outs.front()};
}

SynthResult Checker::synth_letpair(const TypeEnv& env, const ELetPair& lp,
                                   const TypeRef* expected, SourcePos pos) {
    SynthResult scrut = type_synth(env, lp.scrutinee);
    TypeRef head = unfold(scrut.out, scrut.type);
    const auto* sig = std::get_if<TSigma>(&head->node);
    if (!sig)
        fail(ErrCode::KindMismatch,
             "let-pair expects a pair, got " + print_type(scrut.type), pos);
    TypeRef fst_ty = sig->fst;
    TypeRef snd_ty = subst_type(sig->snd, sig->binder, v_var(lp.fst));
    TypeRef fst_head;
    try {
        fst_head = unfold(scrut.out, fst_ty);
    } catch (const Error&) {
        fst_head = fst_ty;
    }
    if (const auto* lt = std::get_if<TLabel>(&fst_head->node)) {
        // A-Sigma-G: check the body once per label of the first component.
        Rule r(*this, "A-Sigma-G");
        std::vector<TypeEnv> outs;
        std::vector<Label> labels;
        std::vector<TypeRef> types;
        for (Label l : lt->set.labels()) {
            Name eq = fresh("eq");
            TypeEnv env2 = scrut.out.bind(lp.fst, fst_ty)
                               .bind(eq, t_eq(fst_ty, v_var(lp.fst), v_label(l)))
                               .bind(lp.snd, snd_ty);
            TypeEnv out;
            if (expected) {
                out = type_check(env2, lp.body, *expected);
                types.push_back(*expected);
            } else {
                SynthResult res = type_synth(env2, lp.body);
                out = res.out;
                types.push_back(res.type);
            }
            out = drop_binding(out, lp.snd, pos);
            if (out.bound(eq)) out = out.consume(eq);
            out = drop_binding(out, lp.fst, pos);
            outs.push_back(out);
            labels.push_back(l);
        }
        check_branch_envs_agree(outs, labels, pos);
        if (!expected) {
            for (size_t i = 1; i < types.size(); ++i)
                if (!alpha_eq(types[0], types[i]))
                    fail(ErrCode::BranchEnvMismatch,
                         "pair-elimination branches synthesize different types", pos);
        }
        return {types.front(), outs.front()};
    }
    Rule r(*this, "A-Sigma-E");
    TypeEnv env2 = scrut.out.bind(lp.fst, fst_ty).bind(lp.snd, snd_ty);
    TypeEnv out;
    TypeRef result;
    if (expected) {
        out = type_check(env2, lp.body, *expected);
        result = *expected;
    } else {
        SynthResult res = type_synth(env2, lp.body);
        out = res.out;
        result = res.type;
    }
    out = drop_binding(out, lp.snd, pos);
    out = drop_binding(out, lp.fst, pos);
    if (!expected && (occurs_free(result, lp.fst) || occurs_free(result, lp.snd)))
        fail(ErrCode::DependencyOnLinear,
             "pair components escape into the result type " + print_type(result), pos);
    return {result, out};
}

namespace {
// One-hole matching of the recursion variable: find the type that alpha
// replaces in `pattern` to obtain `target`.
bool match_tvar(const TypeRef& pattern, const TypeRef& target, Name alpha,
                std::vector<TypeRef>& found) {
    if (const auto* tv = std::get_if<TVar>(&pattern->node)) {
        if (tv->name == alpha && tv->pol == Polarity::Pos) {
            found.push_back(target);
            return true;
        }
    }
    if (pattern->node.index() != target->node.index()) return false;
    return std::visit(
        [&](const auto& np) -> bool {
            using T = std::decay_t<decltype(np)>;
            const auto& nt = std::get<T>(target->node);
            if constexpr (std::is_same_v<T, TPi>) {
                return np.mult == nt.mult && match_tvar(np.dom, nt.dom, alpha, found) &&
                       match_tvar(np.cod, nt.cod, alpha, found);
            } else if constexpr (std::is_same_v<T, TSigma>) {
                return match_tvar(np.fst, nt.fst, alpha, found) &&
                       match_tvar(np.snd, nt.snd, alpha, found);
            } else if constexpr (std::is_same_v<T, TSend> || std::is_same_v<T, TRecv>) {
                return match_tvar(np.payload, nt.payload, alpha, found) &&
                       match_tvar(np.cont, nt.cont, alpha, found);
            } else if constexpr (std::is_same_v<T, TCase>) {
                if (np.branches.size() != nt.branches.size()) return false;
                for (size_t i = 0; i < np.branches.size(); ++i) {
                    if (np.branches[i].first != nt.branches[i].first) return false;
                    if (!match_tvar(np.branches[i].second, nt.branches[i].second, alpha, found))
                        return false;
                }
                return alpha_eq(np.scrutinee, nt.scrutinee);
            } else if constexpr (std::is_same_v<T, TNatRec>) {
                if (np.rec_var == alpha) return alpha_eq(pattern, target);
                return alpha_eq(np.scrutinee, nt.scrutinee) &&
                       match_tvar(np.zero, nt.zero, alpha, found) &&
                       match_tvar(np.succ, nt.succ, alpha, found);
            } else {
                return alpha_eq(pattern, target);
            }
        },
        pattern->node);
}
} // namespace

SynthResult Checker::synth_natrec(const TypeEnv& env, const ENatRec& rec, SourcePos pos) {
    Rule r(*this, "A-Nat-E");
    if (!rec.motive)
        fail(ErrCode::KindMismatch,
             "recursor in synthesis position needs a result type annotation", pos);
    TypeRef motive = rec.motive;

    SynthResult scrut = synth_value(env, rec.scrutinee);
    sub_synth(scrut.out, scrut.type, t_nat());
    kind_synth(env, motive);

    const auto* scrut_var = std::get_if<VVar>(&rec.scrutinee->node);

    // zero arm, used exactly once
    TypeEnv env_z = env;
    Name eqz = fresh("eq");
    if (scrut_var)
        env_z = env_z.bind(eqz, t_eq(t_nat(), rec.scrutinee, v_zero()));
    TypeEnv out = type_check(env_z, rec.zero, motive);
    if (out.bound(eqz)) out = out.consume(eqz);

    // the motive at the predecessor
    TypeRef at_pred =
        scrut_var ? subst_type(motive, scrut_var->name, v_var(rec.pred_var)) : motive;

    // resolve the annotation's recursion variable against the motive
    ExprRef succ_body = rec.succ;
    TypeRef rec_annot = rec.rec_annot;
    if (rec_annot && tvar_occurs(rec_annot, rec.tyvar)) {
        std::vector<TypeRef> found;
        if (!match_tvar(rec_annot, at_pred, rec.tyvar, found) || found.empty())
            fail(ErrCode::NotASubtype,
                 "recursor annotation " + print_type(rec_annot) +
                     " does not match the motive at the predecessor " + print_type(at_pred),
                 pos);
        for (size_t i = 1; i < found.size(); ++i)
            if (!alpha_eq(found[0], found[i]))
                fail(ErrCode::NotASubtype,
                     "recursion variable matches conflicting types in the motive", pos);
        succ_body = subst_tvar_expr(succ_body, rec.tyvar, found[0]);
    }

    // successor arm, used arbitrarily often: unrestricted environment
    TypeEnv env_s = unrestricted(env).bind(rec.pred_var, t_nat());
    Name eqs = fresh("eq");
    if (scrut_var)
        env_s = env_s.bind(eqs, t_eq(t_nat(), rec.scrutinee, v_succ(v_var(rec.pred_var))));
    env_s = env_s.bind(rec.rec_var, at_pred);
    TypeEnv out_s = type_check(env_s, succ_body, motive);
    out_s = drop_binding(out_s, rec.rec_var, pos);
    if (out_s.bound(eqs)) out_s = out_s.consume(eqs);
    out_s = drop_binding(out_s, rec.pred_var, pos);

    return {motive, out};
}

TypeEnv Checker::type_check(const TypeEnv& env, const ExprRef& e, const TypeRef& t) {
    if (const auto* c = std::get_if<ECase>(&e->node)) {
        return synth_case(env, *c, &t).out;
    }
    // Pair introduction against an expected Sigma type: the second component
    // is checked under the equality for the first, so case types over the
    // binder convert.
    {
        const EPair* pe = std::get_if<EPair>(&e->node);
        const VPair* pv = nullptr;
        if (!pe) {
            if (const auto* ev = std::get_if<EVal>(&e->node))
                pv = std::get_if<VPair>(&ev->val->node);
        }
        if (pe || pv) {
            TypeRef head = unfold(env, t);
            if (const auto* sig = std::get_if<TSigma>(&head->node)) {
                Rule r(*this, "A-Sigma-I");
                Name binder = pe ? pe->binder : pv->binder;
                const ValueRef& fst = pe ? pe->fst : pv->fst;
                SynthResult fres = synth_value(env, fst);
                sub_check(fres.out, fres.type, sig->fst, kind_synth(env, sig->fst));
                Kind k = kind_synth(fres.out, sig->fst);
                TypeEnv env2 = fres.out;
                Name eq = fresh("eq");
                if (k.mult == Mult::Un) {
                    env2 = env2.bind(binder, sig->fst)
                               .bind(eq, t_eq(sig->fst, v_var(binder), fst));
                }
                TypeRef snd_ty = subst_type(sig->snd, sig->binder, v_var(binder));
                TypeEnv out = pe ? type_check(env2, pe->snd, snd_ty)
                                 : type_check(env2, e_val(pv->snd), snd_ty);
                if (k.mult == Mult::Un) {
                    if (out.bound(eq)) out = out.consume(eq);
                    out = drop_binding(out, binder, e->pos);
                }
                return out;
            }
        }
    }
    if (const auto* lp = std::get_if<ELetPair>(&e->node)) {
        return synth_letpair(env, *lp, &t, e->pos).out;
    }
    if (const auto* let = std::get_if<ELet>(&e->node)) {
        Rule r(*this, "A-Let");
        SynthResult bound = type_synth(env, let->bound);
        Kind k = kind_synth(bound.out, bound.type);
        TypeEnv env2 = bound.out.bind(let->binder, bound.type);
        Name eq = fresh("eq");
        auto bv = expr_to_value(let->bound);
        bool with_eq = bv.has_value() && k.mult == Mult::Un;
        if (with_eq) env2 = env2.bind(eq, t_eq(bound.type, v_var(let->binder), *bv));
        TypeEnv out = type_check(env2, let->body, t);
        if (with_eq && out.bound(eq)) out = out.consume(eq);
        return drop_binding(out, let->binder, e->pos);
    }
    if (const auto* rec = std::get_if<ENatRec>(&e->node)) {
        if (!rec->motive) {
            ENatRec with_motive = *rec;
            with_motive.motive = t;
            return synth_natrec(env, with_motive, e->pos).out;
        }
        SynthResult res = synth_natrec(env, *rec, e->pos);
        Rule r(*this, "A-Sub-Type");
        sub_check(res.out, res.type, t, kind_synth(res.out, t));
        return res.out;
    }
    Rule r(*this, "A-Sub-Type");
    SynthResult res = type_synth(env, e);
    sub_check(res.out, res.type, t, kind_synth(res.out, t));
    return res.out;
}

// ---------------------------------------------------------------------------
// Processes and programs
// ---------------------------------------------------------------------------

void Checker::check_process(const TypeEnv& env, const ProcessRef& p) {
    Rule ru(*this, "Proc");
    std::function<TypeEnv(const TypeEnv&, const ProcessRef&)> go =
        [&](const TypeEnv& cur, const ProcessRef& proc) -> TypeEnv {
        return std::visit(
            [&](const auto& n) -> TypeEnv {
                using T = std::decay_t<decltype(n)>;
                if constexpr (std::is_same_v<T, PExpr>) {
                    Rule r(*this, "Proc-Expr");
                    SynthResult res = type_synth(cur, n.body);
                    TypeRef head = unfold(res.out, res.type);
                    if (!std::holds_alternative<TUnit>(head->node) &&
                        !std::holds_alternative<TEnd>(head->node))
                        fail(ErrCode::KindMismatch,
                             "thread body must end at Unit or End, got " + print_type(res.type));
                    return res.out;
                } else if constexpr (std::is_same_v<T, PPar>) {
                    Rule r(*this, "Proc-Par");
                    TypeEnv mid = go(cur, n.left);
                    return go(mid, n.right);
                } else {
                    Rule r(*this, "Proc-Channel");
                    if (!n.session)
                        fail(ErrCode::KindMismatch,
                             "channel restriction lacks a session type annotation");
                    if (!is_session(n.session))
                        fail(ErrCode::NotASessionType, "restriction over a non-session type");
                    kind_check(cur, n.session, Kind::lin_session());
                    TypeEnv env2 = cur.bind(n.left, n.session).bind(n.right, dual(n.session));
                    TypeEnv out = go(env2, n.body);
                    out = drop_binding(out, n.right, {});
                    out = drop_binding(out, n.left, {});
                    return out;
                }
            },
            proc->node);
    };
    TypeEnv out = go(env, p);
    for (const auto& entry : out.entries()) {
        if (const auto* tb = std::get_if<TermBind>(&entry.entry)) {
            if (kind_synth(out, tb->type).mult == Mult::Lin)
                (void)drop_binding(out, tb->name, {}); // raises unless discardable
        }
    }
}

Report Checker::check_program(const Program& prog) {
    Report report;
    TypeEnv env;
    for (const auto& def : prog.term_defs) {
        DefReport dr;
        dr.name = def.name.str();
        trace_.clear();
        lints_.clear();
        TypeRef recorded = def.declared;
        try {
            if (def.declared) {
                kind_synth(env, def.declared);
                TypeEnv out = type_check(env, def.body, def.declared);
                if (!TypeEnv::same_bindings(out, env))
                    fail(ErrCode::LinearityViolation,
                         "definition " + dr.name + " consumes linear resources", def.pos);
            } else {
                SynthResult res = type_synth(env, def.body);
                recorded = res.type;
                if (!TypeEnv::same_bindings(res.out, env))
                    fail(ErrCode::LinearityViolation,
                         "definition " + dr.name + " consumes linear resources", def.pos);
            }
        } catch (const Error& err) {
            dr.ok = false;
            dr.code = err.code();
            dr.message = err.message();
            dr.pos = err.pos().known() ? err.pos() : def.pos;
            dr.trace = err.trace();
        }
        for (const auto& l : lints_) report.lints.push_back(dr.name + ": " + l);
        report.defs.push_back(std::move(dr));
        if (!report.defs.back().ok && !opts_.keep_going) break;
        if (recorded) env = env.bind(def.name, recorded);
    }
    return report;
}

std::string Report::render_text() const {
    std::string out;
    for (const auto& d : defs) {
        if (d.ok) {
            out += d.name + ": OK\n";
        } else {
            out += d.name + ": ERROR " + err_code_name(d.code) + ": " + d.message;
            if (d.pos.known()) out += " at " + d.pos.to_string();
            if (!d.trace.empty()) {
                out += " [";
                for (size_t i = 0; i < d.trace.size(); ++i) {
                    if (i) out += " > ";
                    out += d.trace[i];
                }
                out += "]";
            }
            out += "\n";
        }
    }
    for (const auto& l : lints) out += "lint: " + l + "\n";
    return out;
}

std::string Report::render_json() const {
    nlohmann::json j;
    j["definitions"] = nlohmann::json::array();
    for (const auto& d : defs) {
        nlohmann::json jd;
        jd["name"] = d.name;
        jd["status"] = d.ok ? "ok" : "error";
        if (!d.ok) {
            jd["error"] = {{"code", err_code_name(d.code)},
                           {"message", d.message},
                           {"line", d.pos.line},
                           {"column", d.pos.column},
                           {"trace", d.trace}};
        }
        j["definitions"].push_back(jd);
    }
    j["lints"] = lints;
    j["ok"] = all_ok();
    return j.dump(2);
}

} // namespace ldst
