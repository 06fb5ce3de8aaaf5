#include "ldst/ast.hpp"

#include <algorithm>
#include <functional>
#include <mutex>
#include <unordered_map>

namespace ldst {

// ---------------------------------------------------------------------------
// Interner
// ---------------------------------------------------------------------------

namespace {

class Interner {
public:
    uint32_t intern(const std::string& text) {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = ids_.find(text);
        if (it != ids_.end()) return it->second;
        uint32_t id = static_cast<uint32_t>(texts_.size());
        texts_.push_back(text);
        ids_.emplace(text, id);
        return id;
    }

    uint32_t fresh(const std::string& base) {
        std::lock_guard<std::mutex> lock(mu_);
        std::string stem = base.substr(0, base.find("__"));
        if (stem.empty()) stem = "v";
        for (;;) {
            std::string cand = stem + "__" + std::to_string(counter_++);
            if (ids_.find(cand) == ids_.end()) {
                uint32_t id = static_cast<uint32_t>(texts_.size());
                texts_.push_back(cand);
                ids_.emplace(cand, id);
                return id;
            }
        }
    }

    const std::string& text(uint32_t id) {
        std::lock_guard<std::mutex> lock(mu_);
        return texts_[id];
    }

private:
    std::mutex mu_;
    std::unordered_map<std::string, uint32_t> ids_;
    std::vector<std::string> texts_;
    uint64_t counter_ = 0;
};

Interner& names() {
    static Interner i;
    return i;
}

Interner& labels() {
    static Interner i;
    return i;
}

} // namespace

const std::string& Name::str() const { return names().text(id); }
Name intern(const std::string& text) { return Name{names().intern(text)}; }
Name fresh(const Name& base) { return Name{names().fresh(base.str())}; }
Name fresh(const std::string& base) { return Name{names().fresh(base)}; }

const std::string& Label::str() const { return labels().text(id); }
Label label(const std::string& text) { return Label{labels().intern(text)}; }

// ---------------------------------------------------------------------------
// LabelSet
// ---------------------------------------------------------------------------

LabelSet::LabelSet(std::vector<Label> ls) : labels_(std::move(ls)) {
    std::sort(labels_.begin(), labels_.end(),
              [](Label a, Label b) { return a.str() < b.str(); });
    labels_.erase(std::unique(labels_.begin(), labels_.end()), labels_.end());
}

bool LabelSet::contains(Label l) const {
    return std::find(labels_.begin(), labels_.end(), l) != labels_.end();
}

bool LabelSet::subset_of(const LabelSet& other) const {
    for (Label l : labels_)
        if (!other.contains(l)) return false;
    return true;
}

LabelSet LabelSet::intersect(const LabelSet& other) const {
    std::vector<Label> out;
    for (Label l : labels_)
        if (other.contains(l)) out.push_back(l);
    return LabelSet(std::move(out));
}

LabelSet LabelSet::unite(const LabelSet& other) const {
    std::vector<Label> out = labels_;
    out.insert(out.end(), other.labels_.begin(), other.labels_.end());
    return LabelSet(std::move(out));
}

std::string kind_to_string(Kind k) {
    std::string m = k.mult == Mult::Un ? "un" : "lin";
    return k.base == KindBase::Session ? m + " session" : m;
}

const char* err_code_name(ErrCode c) {
    switch (c) {
    case ErrCode::None: return "None";
    case ErrCode::SyntaxError: return "SyntaxError";
    case ErrCode::DuplicateDefinition: return "DuplicateDefinition";
    case ErrCode::UnknownTypeName: return "UnknownTypeName";
    case ErrCode::NotASessionType: return "NotASessionType";
    case ErrCode::NotConvertible: return "NotConvertible";
    case ErrCode::UnfoldFailed: return "UnfoldFailed";
    case ErrCode::KindMismatch: return "KindMismatch";
    case ErrCode::NotASubtype: return "NotASubtype";
    case ErrCode::LinearityViolation: return "LinearityViolation";
    case ErrCode::BranchEnvMismatch: return "BranchEnvMismatch";
    case ErrCode::DependencyOnLinear: return "DependencyOnLinear";
    case ErrCode::UnboundName: return "UnboundName";
    case ErrCode::FuelExhausted: return "FuelExhausted";
    case ErrCode::ValueRestriction: return "ValueRestriction";
    case ErrCode::JoinConflict: return "JoinConflict";
    case ErrCode::SimulationMismatch: return "SimulationMismatch";
    }
    return "Unknown";
}

std::string Error::render() const {
    std::string out = std::string(err_code_name(code_)) + ": " + message_;
    if (pos_.known()) out += " at " + pos_.to_string();
    if (!trace_.empty()) {
        out += " [";
        for (size_t i = 0; i < trace_.size(); ++i) {
            if (i) out += " > ";
            out += trace_[i];
        }
        out += "]";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Constructors
// ---------------------------------------------------------------------------

namespace {
template <typename N> TypeRef mk_t(N&& n) {
    return std::make_shared<const Type>(Type{std::forward<N>(n), {}});
}
template <typename N> ValueRef mk_v(N&& n) {
    return std::make_shared<const Value>(Value{std::forward<N>(n), {}});
}
template <typename N> ExprRef mk_e(N&& n) {
    return std::make_shared<const Expr>(Expr{std::forward<N>(n), {}});
}

void sort_branches(std::vector<std::pair<Label, TypeRef>>& bs) {
    std::sort(bs.begin(), bs.end(), [](const auto& a, const auto& b) {
        return a.first.str() < b.first.str();
    });
}
void sort_branches(std::vector<std::pair<Label, ExprRef>>& bs) {
    std::sort(bs.begin(), bs.end(), [](const auto& a, const auto& b) {
        return a.first.str() < b.first.str();
    });
}
} // namespace

TypeRef t_unit() { static TypeRef t = mk_t(TUnit{}); return t; }
TypeRef t_int() { static TypeRef t = mk_t(TInt{}); return t; }
TypeRef t_nat() { static TypeRef t = mk_t(TNat{}); return t; }
TypeRef t_end() { static TypeRef t = mk_t(TEnd{}); return t; }
TypeRef t_label(LabelSet ls) { return mk_t(TLabel{std::move(ls)}); }
TypeRef t_eq(TypeRef index, ValueRef lhs, ValueRef rhs) {
    return mk_t(TEq{std::move(index), std::move(lhs), std::move(rhs)});
}
TypeRef t_case(ValueRef scrutinee, std::vector<std::pair<Label, TypeRef>> branches) {
    sort_branches(branches);
    return mk_t(TCase{std::move(scrutinee), std::move(branches)});
}
TypeRef t_pi(Mult m, Name binder, TypeRef dom, TypeRef cod) {
    return mk_t(TPi{m, binder, std::move(dom), std::move(cod)});
}
TypeRef t_sigma(Name binder, TypeRef fst, TypeRef snd) {
    return mk_t(TSigma{binder, std::move(fst), std::move(snd)});
}
TypeRef t_send(Name binder, TypeRef payload, TypeRef cont) {
    return mk_t(TSend{binder, std::move(payload), std::move(cont)});
}
TypeRef t_recv(Name binder, TypeRef payload, TypeRef cont) {
    return mk_t(TRecv{binder, std::move(payload), std::move(cont)});
}
TypeRef t_natrec(ValueRef scrutinee, TypeRef zero, Name rec_var, Kind kind, TypeRef succ) {
    return mk_t(TNatRec{std::move(scrutinee), std::move(zero), rec_var, kind, std::move(succ)});
}
TypeRef t_var(Name name, Polarity pol) { return mk_t(TVar{name, pol}); }

ValueRef v_var(Name n) { return mk_v(VVar{n}); }
ValueRef v_chan(int endpoint) { return mk_v(VChan{endpoint}); }
ValueRef v_label(Label l) { return mk_v(VLabel{l}); }
ValueRef v_unit() { static ValueRef v = mk_v(VUnit{}); return v; }
ValueRef v_lam(Mult m, Name binder, TypeRef annot, ExprRef body) {
    return mk_v(VLam{m, binder, std::move(annot), std::move(body)});
}
ValueRef v_pair(Name binder, TypeRef annot, ValueRef fst, ValueRef snd) {
    return mk_v(VPair{binder, std::move(annot), std::move(fst), std::move(snd)});
}
ValueRef v_send(ValueRef chan) { return mk_v(VSend{std::move(chan)}); }
ValueRef v_zero() { static ValueRef v = mk_v(VZero{}); return v; }
ValueRef v_succ(ValueRef pred) { return mk_v(VSucc{std::move(pred)}); }
ValueRef v_nat(unsigned n) {
    ValueRef v = v_zero();
    for (unsigned i = 0; i < n; ++i) v = v_succ(v);
    return v;
}
ValueRef v_int(long long v) { return mk_v(VInt{v}); }

ExprRef e_val(ValueRef v) { return mk_e(EVal{std::move(v)}); }
ExprRef e_var(Name n) { return e_val(v_var(n)); }
ExprRef e_case(ValueRef scrutinee, std::vector<std::pair<Label, ExprRef>> branches) {
    sort_branches(branches);
    return mk_e(ECase{std::move(scrutinee), std::move(branches)});
}
ExprRef e_app(ExprRef fn, ExprRef arg) { return mk_e(EApp{std::move(fn), std::move(arg)}); }
ExprRef e_pair(Name binder, TypeRef annot, ValueRef fst, ExprRef snd) {
    return mk_e(EPair{binder, std::move(annot), std::move(fst), std::move(snd)});
}
ExprRef e_letpair(Name fst, Name snd, ExprRef scrutinee, ExprRef body) {
    return mk_e(ELetPair{fst, snd, std::move(scrutinee), std::move(body)});
}
ExprRef e_let(Name binder, ExprRef bound, ExprRef body) {
    return mk_e(ELet{binder, std::move(bound), std::move(body)});
}
ExprRef e_new(TypeRef session) { return mk_e(ENew{std::move(session)}); }
ExprRef e_fork(ExprRef body) { return mk_e(EFork{std::move(body)}); }
ExprRef e_send(ExprRef chan) { return mk_e(ESend{std::move(chan)}); }
ExprRef e_recv(ExprRef chan) { return mk_e(ERecv{std::move(chan)}); }
ExprRef e_natrec(ValueRef scrutinee, TypeRef motive, ExprRef zero, Name pred_var,
                 Name tyvar, Name rec_var, TypeRef rec_annot, ExprRef succ) {
    return mk_e(ENatRec{std::move(scrutinee), std::move(motive), std::move(zero),
                        pred_var, tyvar, rec_var, std::move(rec_annot), std::move(succ)});
}
ExprRef e_neg(ExprRef arg) { return mk_e(ENeg{std::move(arg)}); }
ExprRef e_add(ExprRef lhs, ExprRef rhs) { return mk_e(EAdd{std::move(lhs), std::move(rhs)}); }

ProcessRef p_expr(ExprRef e) {
    return std::make_shared<const Process>(Process{PExpr{std::move(e)}});
}
ProcessRef p_par(ProcessRef l, ProcessRef r) {
    return std::make_shared<const Process>(Process{PPar{std::move(l), std::move(r)}});
}
ProcessRef p_nu(Name l, Name r, TypeRef session, ProcessRef body) {
    return std::make_shared<const Process>(Process{PNu{l, r, std::move(session), std::move(body)}});
}

// ---------------------------------------------------------------------------
// Session fragment and duality
// ---------------------------------------------------------------------------

bool is_session(const TypeRef& t) {
    return std::visit(
        [](const auto& n) -> bool {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, TEnd> || std::is_same_v<T, TSend> ||
                          std::is_same_v<T, TRecv> || std::is_same_v<T, TVar>) {
                return true;
            } else if constexpr (std::is_same_v<T, TCase>) {
                for (const auto& [l, b] : n.branches)
                    if (!is_session(b)) return false;
                return true;
            } else if constexpr (std::is_same_v<T, TNatRec>) {
                return is_session(n.zero) && is_session(n.succ);
            } else {
                return false;
            }
        },
        t->node);
}

namespace {

// Flip the polarity of every occurrence of alpha, respecting shadowing.
TypeRef swap_polarities(const TypeRef& t, Name alpha) {
    return std::visit(
        [&](const auto& n) -> TypeRef {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, TVar>) {
                if (n.name == alpha) return t_var(n.name, flip(n.pol));
                return t;
            } else if constexpr (std::is_same_v<T, TCase>) {
                auto bs = n.branches;
                for (auto& [l, b] : bs) b = swap_polarities(b, alpha);
                return t_case(n.scrutinee, std::move(bs));
            } else if constexpr (std::is_same_v<T, TSend>) {
                return t_send(n.binder, swap_polarities(n.payload, alpha),
                              swap_polarities(n.cont, alpha));
            } else if constexpr (std::is_same_v<T, TRecv>) {
                return t_recv(n.binder, swap_polarities(n.payload, alpha),
                              swap_polarities(n.cont, alpha));
            } else if constexpr (std::is_same_v<T, TPi>) {
                return t_pi(n.mult, n.binder, swap_polarities(n.dom, alpha),
                            swap_polarities(n.cod, alpha));
            } else if constexpr (std::is_same_v<T, TSigma>) {
                return t_sigma(n.binder, swap_polarities(n.fst, alpha),
                               swap_polarities(n.snd, alpha));
            } else if constexpr (std::is_same_v<T, TNatRec>) {
                if (n.rec_var == alpha) return t; // shadowed
                return t_natrec(n.scrutinee, swap_polarities(n.zero, alpha), n.rec_var,
                                n.kind, swap_polarities(n.succ, alpha));
            } else if constexpr (std::is_same_v<T, TEq>) {
                return t_eq(swap_polarities(n.index, alpha), n.lhs, n.rhs);
            } else {
                return t;
            }
        },
        t->node);
}

} // namespace

TypeRef dual(const TypeRef& t) {
    return std::visit(
        [&](const auto& n) -> TypeRef {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, TEnd>) {
                return t;
            } else if constexpr (std::is_same_v<T, TSend>) {
                return t_recv(n.binder, n.payload, dual(n.cont));
            } else if constexpr (std::is_same_v<T, TRecv>) {
                return t_send(n.binder, n.payload, dual(n.cont));
            } else if constexpr (std::is_same_v<T, TCase>) {
                auto bs = n.branches;
                for (auto& [l, b] : bs) b = dual(b);
                return t_case(n.scrutinee, std::move(bs));
            } else if constexpr (std::is_same_v<T, TVar>) {
                // Reached in tail position: remember we stand for the dual.
                return t_var(n.name, flip(n.pol));
            } else if constexpr (std::is_same_v<T, TNatRec>) {
                TypeRef dz = dual(n.zero);
                TypeRef ds = swap_polarities(dual(n.succ), n.rec_var);
                return t_natrec(n.scrutinee, std::move(dz), n.rec_var, n.kind, std::move(ds));
            } else {
                throw Error(ErrCode::NotASessionType,
                            "dual applied outside the session fragment", t->pos);
            }
        },
        t->node);
}

// ---------------------------------------------------------------------------
// Free variables
// ---------------------------------------------------------------------------

namespace {

void fv_type(const TypeRef& t, std::set<Name>& bound, std::set<Name>& out);
void fv_value(const ValueRef& v, std::set<Name>& bound, std::set<Name>& out);
void fv_expr(const ExprRef& e, std::set<Name>& bound, std::set<Name>& out);

struct ScopedBind {
    std::set<Name>& bound;
    Name n;
    bool added;
    ScopedBind(std::set<Name>& b, Name name) : bound(b), n(name) {
        added = bound.insert(n).second;
    }
    ~ScopedBind() {
        if (added) bound.erase(n);
    }
};

void fv_type(const TypeRef& t, std::set<Name>& bound, std::set<Name>& out) {
    std::visit(
        [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, TEq>) {
                fv_type(n.index, bound, out);
                fv_value(n.lhs, bound, out);
                fv_value(n.rhs, bound, out);
            } else if constexpr (std::is_same_v<T, TCase>) {
                fv_value(n.scrutinee, bound, out);
                for (const auto& [l, b] : n.branches) fv_type(b, bound, out);
            } else if constexpr (std::is_same_v<T, TPi>) {
                fv_type(n.dom, bound, out);
                ScopedBind s(bound, n.binder);
                fv_type(n.cod, bound, out);
            } else if constexpr (std::is_same_v<T, TSigma>) {
                fv_type(n.fst, bound, out);
                ScopedBind s(bound, n.binder);
                fv_type(n.snd, bound, out);
            } else if constexpr (std::is_same_v<T, TSend> || std::is_same_v<T, TRecv>) {
                fv_type(n.payload, bound, out);
                ScopedBind s(bound, n.binder);
                fv_type(n.cont, bound, out);
            } else if constexpr (std::is_same_v<T, TNatRec>) {
                fv_value(n.scrutinee, bound, out);
                fv_type(n.zero, bound, out);
                fv_type(n.succ, bound, out);
            }
        },
        t->node);
}

void fv_value(const ValueRef& v, std::set<Name>& bound, std::set<Name>& out) {
    std::visit(
        [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, VVar>) {
                if (!bound.count(n.name)) out.insert(n.name);
            } else if constexpr (std::is_same_v<T, VLam>) {
                if (n.annot) fv_type(n.annot, bound, out);
                ScopedBind s(bound, n.binder);
                fv_expr(n.body, bound, out);
            } else if constexpr (std::is_same_v<T, VPair>) {
                if (n.annot) fv_type(n.annot, bound, out);
                fv_value(n.fst, bound, out);
                ScopedBind s(bound, n.binder);
                fv_value(n.snd, bound, out);
            } else if constexpr (std::is_same_v<T, VSend>) {
                fv_value(n.chan, bound, out);
            } else if constexpr (std::is_same_v<T, VSucc>) {
                fv_value(n.pred, bound, out);
            }
        },
        v->node);
}

void fv_expr(const ExprRef& e, std::set<Name>& bound, std::set<Name>& out) {
    std::visit(
        [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, EVal>) {
                fv_value(n.val, bound, out);
            } else if constexpr (std::is_same_v<T, ECase>) {
                fv_value(n.scrutinee, bound, out);
                for (const auto& [l, b] : n.branches) fv_expr(b, bound, out);
            } else if constexpr (std::is_same_v<T, EApp>) {
                fv_expr(n.fn, bound, out);
                fv_expr(n.arg, bound, out);
            } else if constexpr (std::is_same_v<T, EPair>) {
                if (n.annot) fv_type(n.annot, bound, out);
                fv_value(n.fst, bound, out);
                ScopedBind s(bound, n.binder);
                fv_expr(n.snd, bound, out);
            } else if constexpr (std::is_same_v<T, ELetPair>) {
                fv_expr(n.scrutinee, bound, out);
                ScopedBind s1(bound, n.fst);
                ScopedBind s2(bound, n.snd);
                fv_expr(n.body, bound, out);
            } else if constexpr (std::is_same_v<T, ELet>) {
                fv_expr(n.bound, bound, out);
                ScopedBind s(bound, n.binder);
                fv_expr(n.body, bound, out);
            } else if constexpr (std::is_same_v<T, ENew>) {
                fv_type(n.session, bound, out);
            } else if constexpr (std::is_same_v<T, EFork>) {
                fv_expr(n.body, bound, out);
            } else if constexpr (std::is_same_v<T, ESend> || std::is_same_v<T, ERecv>) {
                fv_expr(n.chan, bound, out);
            } else if constexpr (std::is_same_v<T, ENatRec>) {
                fv_value(n.scrutinee, bound, out);
                if (n.motive) fv_type(n.motive, bound, out);
                fv_expr(n.zero, bound, out);
                if (n.rec_annot) fv_type(n.rec_annot, bound, out);
                ScopedBind s1(bound, n.pred_var);
                ScopedBind s2(bound, n.rec_var);
                fv_expr(n.succ, bound, out);
            } else if constexpr (std::is_same_v<T, ENeg>) {
                fv_expr(n.arg, bound, out);
            } else if constexpr (std::is_same_v<T, EAdd>) {
                fv_expr(n.lhs, bound, out);
                fv_expr(n.rhs, bound, out);
            }
        },
        e->node);
}

} // namespace

std::set<Name> free_vars(const TypeRef& t) {
    std::set<Name> bound, out;
    fv_type(t, bound, out);
    return out;
}
std::set<Name> free_vars(const ValueRef& v) {
    std::set<Name> bound, out;
    fv_value(v, bound, out);
    return out;
}
std::set<Name> free_vars(const ExprRef& e) {
    std::set<Name> bound, out;
    fv_expr(e, bound, out);
    return out;
}
bool occurs_free(const TypeRef& t, Name x) { return free_vars(t).count(x) != 0; }

bool tvar_occurs(const TypeRef& t, Name alpha) {
    return std::visit(
        [&](const auto& n) -> bool {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, TVar>) {
                return n.name == alpha;
            } else if constexpr (std::is_same_v<T, TCase>) {
                for (const auto& [l, b] : n.branches)
                    if (tvar_occurs(b, alpha)) return true;
                return false;
            } else if constexpr (std::is_same_v<T, TPi>) {
                return tvar_occurs(n.dom, alpha) || tvar_occurs(n.cod, alpha);
            } else if constexpr (std::is_same_v<T, TSigma>) {
                return tvar_occurs(n.fst, alpha) || tvar_occurs(n.snd, alpha);
            } else if constexpr (std::is_same_v<T, TSend> || std::is_same_v<T, TRecv>) {
                return tvar_occurs(n.payload, alpha) || tvar_occurs(n.cont, alpha);
            } else if constexpr (std::is_same_v<T, TNatRec>) {
                if (tvar_occurs(n.zero, alpha)) return true;
                if (n.rec_var == alpha) return false;
                return tvar_occurs(n.succ, alpha);
            } else if constexpr (std::is_same_v<T, TEq>) {
                return tvar_occurs(n.index, alpha);
            } else {
                return false;
            }
        },
        t->node);
}

// ---------------------------------------------------------------------------
// Substitution
// ---------------------------------------------------------------------------

namespace {

// Rename binder if it would capture a free variable of v or shadow x.
template <typename RenameBody>
Name avoid_capture(Name binder, Name x, const ValueRef& v, RenameBody rename) {
    if (binder == x) return binder; // shadowing handled by caller
    if (free_vars(v).count(binder)) {
        Name nb = fresh(binder);
        rename(nb);
        return nb;
    }
    return binder;
}

} // namespace

TypeRef subst_type(const TypeRef& t, Name x, const ValueRef& v) {
    return std::visit(
        [&](const auto& n) -> TypeRef {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, TEq>) {
                return t_eq(subst_type(n.index, x, v), subst_value(n.lhs, x, v),
                            subst_value(n.rhs, x, v));
            } else if constexpr (std::is_same_v<T, TCase>) {
                auto bs = n.branches;
                for (auto& [l, b] : bs) b = subst_type(b, x, v);
                return t_case(subst_value(n.scrutinee, x, v), std::move(bs));
            } else if constexpr (std::is_same_v<T, TPi>) {
                TypeRef dom = subst_type(n.dom, x, v);
                if (n.binder == x) return t_pi(n.mult, n.binder, dom, n.cod);
                TypeRef cod = n.cod;
                Name b = avoid_capture(n.binder, x, v, [&](Name nb) {
                    cod = subst_type(cod, n.binder, v_var(nb));
                });
                return t_pi(n.mult, b, dom, subst_type(cod, x, v));
            } else if constexpr (std::is_same_v<T, TSigma>) {
                TypeRef fst = subst_type(n.fst, x, v);
                if (n.binder == x) return t_sigma(n.binder, fst, n.snd);
                TypeRef snd = n.snd;
                Name b = avoid_capture(n.binder, x, v, [&](Name nb) {
                    snd = subst_type(snd, n.binder, v_var(nb));
                });
                return t_sigma(b, fst, subst_type(snd, x, v));
            } else if constexpr (std::is_same_v<T, TSend> || std::is_same_v<T, TRecv>) {
                TypeRef payload = subst_type(n.payload, x, v);
                bool send = std::is_same_v<T, TSend>;
                if (n.binder == x)
                    return send ? t_send(n.binder, payload, n.cont)
                                : t_recv(n.binder, payload, n.cont);
                TypeRef cont = n.cont;
                Name b = avoid_capture(n.binder, x, v, [&](Name nb) {
                    cont = subst_type(cont, n.binder, v_var(nb));
                });
                cont = subst_type(cont, x, v);
                return send ? t_send(b, payload, cont) : t_recv(b, payload, cont);
            } else if constexpr (std::is_same_v<T, TNatRec>) {
                return t_natrec(subst_value(n.scrutinee, x, v), subst_type(n.zero, x, v),
                                n.rec_var, n.kind, subst_type(n.succ, x, v));
            } else {
                return t;
            }
        },
        t->node);
}

ValueRef subst_value(const ValueRef& w, Name x, const ValueRef& v) {
    return std::visit(
        [&](const auto& n) -> ValueRef {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, VVar>) {
                return n.name == x ? v : w;
            } else if constexpr (std::is_same_v<T, VLam>) {
                TypeRef annot = n.annot ? subst_type(n.annot, x, v) : n.annot;
                if (n.binder == x) return v_lam(n.mult, n.binder, annot, n.body);
                ExprRef body = n.body;
                Name b = avoid_capture(n.binder, x, v, [&](Name nb) {
                    body = subst_expr(body, n.binder, v_var(nb));
                });
                return v_lam(n.mult, b, annot, subst_expr(body, x, v));
            } else if constexpr (std::is_same_v<T, VPair>) {
                TypeRef annot = n.annot ? subst_type(n.annot, x, v) : n.annot;
                ValueRef fst = subst_value(n.fst, x, v);
                if (n.binder == x) return v_pair(n.binder, annot, fst, n.snd);
                ValueRef snd = n.snd;
                Name b = avoid_capture(n.binder, x, v, [&](Name nb) {
                    snd = subst_value(snd, n.binder, v_var(nb));
                });
                return v_pair(b, annot, fst, subst_value(snd, x, v));
            } else if constexpr (std::is_same_v<T, VSend>) {
                return v_send(subst_value(n.chan, x, v));
            } else if constexpr (std::is_same_v<T, VSucc>) {
                return v_succ(subst_value(n.pred, x, v));
            } else {
                return w;
            }
        },
        w->node);
}

ExprRef subst_expr(const ExprRef& e, Name x, const ValueRef& v) {
    return std::visit(
        [&](const auto& n) -> ExprRef {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, EVal>) {
                return e_val(subst_value(n.val, x, v));
            } else if constexpr (std::is_same_v<T, ECase>) {
                auto bs = n.branches;
                for (auto& [l, b] : bs) b = subst_expr(b, x, v);
                return e_case(subst_value(n.scrutinee, x, v), std::move(bs));
            } else if constexpr (std::is_same_v<T, EApp>) {
                return e_app(subst_expr(n.fn, x, v), subst_expr(n.arg, x, v));
            } else if constexpr (std::is_same_v<T, EPair>) {
                TypeRef annot = n.annot ? subst_type(n.annot, x, v) : n.annot;
                ValueRef fst = subst_value(n.fst, x, v);
                if (n.binder == x) return e_pair(n.binder, annot, fst, n.snd);
                ExprRef snd = n.snd;
                Name b = avoid_capture(n.binder, x, v, [&](Name nb) {
                    snd = subst_expr(snd, n.binder, v_var(nb));
                });
                return e_pair(b, annot, fst, subst_expr(snd, x, v));
            } else if constexpr (std::is_same_v<T, ELetPair>) {
                ExprRef scr = subst_expr(n.scrutinee, x, v);
                if (n.fst == x || n.snd == x) return e_letpair(n.fst, n.snd, scr, n.body);
                ExprRef body = n.body;
                Name f = avoid_capture(n.fst, x, v, [&](Name nb) {
                    body = subst_expr(body, n.fst, v_var(nb));
                });
                Name s = avoid_capture(n.snd, x, v, [&](Name nb) {
                    body = subst_expr(body, n.snd, v_var(nb));
                });
                return e_letpair(f, s, scr, subst_expr(body, x, v));
            } else if constexpr (std::is_same_v<T, ELet>) {
                ExprRef bound = subst_expr(n.bound, x, v);
                if (n.binder == x) return e_let(n.binder, bound, n.body);
                ExprRef body = n.body;
                Name b = avoid_capture(n.binder, x, v, [&](Name nb) {
                    body = subst_expr(body, n.binder, v_var(nb));
                });
                return e_let(b, bound, subst_expr(body, x, v));
            } else if constexpr (std::is_same_v<T, ENew>) {
                return e_new(subst_type(n.session, x, v));
            } else if constexpr (std::is_same_v<T, EFork>) {
                return e_fork(subst_expr(n.body, x, v));
            } else if constexpr (std::is_same_v<T, ESend>) {
                return e_send(subst_expr(n.chan, x, v));
            } else if constexpr (std::is_same_v<T, ERecv>) {
                return e_recv(subst_expr(n.chan, x, v));
            } else if constexpr (std::is_same_v<T, ENatRec>) {
                ValueRef scr = subst_value(n.scrutinee, x, v);
                TypeRef motive = n.motive ? subst_type(n.motive, x, v) : n.motive;
                ExprRef zero = subst_expr(n.zero, x, v);
                TypeRef annot = n.rec_annot ? subst_type(n.rec_annot, x, v) : n.rec_annot;
                if (n.pred_var == x || n.rec_var == x)
                    return e_natrec(scr, motive, zero, n.pred_var, n.tyvar, n.rec_var,
                                    annot, n.succ);
                ExprRef succ = n.succ;
                Name p = avoid_capture(n.pred_var, x, v, [&](Name nb) {
                    succ = subst_expr(succ, n.pred_var, v_var(nb));
                });
                Name r = avoid_capture(n.rec_var, x, v, [&](Name nb) {
                    succ = subst_expr(succ, n.rec_var, v_var(nb));
                });
                return e_natrec(scr, motive, zero, p, n.tyvar, r, annot,
                                subst_expr(succ, x, v));
            } else if constexpr (std::is_same_v<T, ENeg>) {
                return e_neg(subst_expr(n.arg, x, v));
            } else if constexpr (std::is_same_v<T, EAdd>) {
                return e_add(subst_expr(n.lhs, x, v), subst_expr(n.rhs, x, v));
            } else {
                return e;
            }
        },
        e->node);
}

TypeRef subst_tvar(const TypeRef& t, Name alpha, const TypeRef& r) {
    return std::visit(
        [&](const auto& n) -> TypeRef {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, TVar>) {
                if (n.name != alpha) return t;
                return n.pol == Polarity::Pos ? r : dual(r);
            } else if constexpr (std::is_same_v<T, TCase>) {
                auto bs = n.branches;
                for (auto& [l, b] : bs) b = subst_tvar(b, alpha, r);
                return t_case(n.scrutinee, std::move(bs));
            } else if constexpr (std::is_same_v<T, TPi>) {
                return t_pi(n.mult, n.binder, subst_tvar(n.dom, alpha, r),
                            subst_tvar(n.cod, alpha, r));
            } else if constexpr (std::is_same_v<T, TSigma>) {
                return t_sigma(n.binder, subst_tvar(n.fst, alpha, r),
                               subst_tvar(n.snd, alpha, r));
            } else if constexpr (std::is_same_v<T, TSend>) {
                return t_send(n.binder, subst_tvar(n.payload, alpha, r),
                              subst_tvar(n.cont, alpha, r));
            } else if constexpr (std::is_same_v<T, TRecv>) {
                return t_recv(n.binder, subst_tvar(n.payload, alpha, r),
                              subst_tvar(n.cont, alpha, r));
            } else if constexpr (std::is_same_v<T, TNatRec>) {
                TypeRef zero = subst_tvar(n.zero, alpha, r);
                if (n.rec_var == alpha) return t_natrec(n.scrutinee, zero, n.rec_var, n.kind, n.succ);
                return t_natrec(n.scrutinee, zero, n.rec_var, n.kind,
                                subst_tvar(n.succ, alpha, r));
            } else if constexpr (std::is_same_v<T, TEq>) {
                return t_eq(subst_tvar(n.index, alpha, r), n.lhs, n.rhs);
            } else {
                return t;
            }
        },
        t->node);
}

ExprRef subst_tvar_expr(const ExprRef& e, Name alpha, const TypeRef& r) {
    auto on_type = [&](const TypeRef& t) { return t ? subst_tvar(t, alpha, r) : t; };
    std::function<ValueRef(const ValueRef&)> on_value = [&](const ValueRef& v) -> ValueRef {
        return std::visit(
            [&](const auto& n) -> ValueRef {
                using T = std::decay_t<decltype(n)>;
                if constexpr (std::is_same_v<T, VLam>) {
                    return v_lam(n.mult, n.binder, on_type(n.annot),
                                 subst_tvar_expr(n.body, alpha, r));
                } else if constexpr (std::is_same_v<T, VPair>) {
                    return v_pair(n.binder, on_type(n.annot), on_value(n.fst), on_value(n.snd));
                } else if constexpr (std::is_same_v<T, VSend>) {
                    return v_send(on_value(n.chan));
                } else if constexpr (std::is_same_v<T, VSucc>) {
                    return v_succ(on_value(n.pred));
                } else {
                    return v;
                }
            },
            v->node);
    };
    return std::visit(
        [&](const auto& n) -> ExprRef {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, EVal>) {
                return e_val(on_value(n.val));
            } else if constexpr (std::is_same_v<T, ECase>) {
                auto bs = n.branches;
                for (auto& [l, b] : bs) b = subst_tvar_expr(b, alpha, r);
                return e_case(on_value(n.scrutinee), std::move(bs));
            } else if constexpr (std::is_same_v<T, EApp>) {
                return e_app(subst_tvar_expr(n.fn, alpha, r), subst_tvar_expr(n.arg, alpha, r));
            } else if constexpr (std::is_same_v<T, EPair>) {
                return e_pair(n.binder, on_type(n.annot), on_value(n.fst),
                              subst_tvar_expr(n.snd, alpha, r));
            } else if constexpr (std::is_same_v<T, ELetPair>) {
                return e_letpair(n.fst, n.snd, subst_tvar_expr(n.scrutinee, alpha, r),
                                 subst_tvar_expr(n.body, alpha, r));
            } else if constexpr (std::is_same_v<T, ELet>) {
                return e_let(n.binder, subst_tvar_expr(n.bound, alpha, r),
                             subst_tvar_expr(n.body, alpha, r));
            } else if constexpr (std::is_same_v<T, ENew>) {
                return e_new(on_type(n.session));
            } else if constexpr (std::is_same_v<T, EFork>) {
                return e_fork(subst_tvar_expr(n.body, alpha, r));
            } else if constexpr (std::is_same_v<T, ESend>) {
                return e_send(subst_tvar_expr(n.chan, alpha, r));
            } else if constexpr (std::is_same_v<T, ERecv>) {
                return e_recv(subst_tvar_expr(n.chan, alpha, r));
            } else if constexpr (std::is_same_v<T, ENatRec>) {
                if (n.tyvar == alpha)
                    return e_natrec(on_value(n.scrutinee), on_type(n.motive),
                                    subst_tvar_expr(n.zero, alpha, r), n.pred_var, n.tyvar,
                                    n.rec_var, n.rec_annot, n.succ);
                return e_natrec(on_value(n.scrutinee), on_type(n.motive),
                                subst_tvar_expr(n.zero, alpha, r), n.pred_var, n.tyvar,
                                n.rec_var, on_type(n.rec_annot),
                                subst_tvar_expr(n.succ, alpha, r));
            } else if constexpr (std::is_same_v<T, ENeg>) {
                return e_neg(subst_tvar_expr(n.arg, alpha, r));
            } else if constexpr (std::is_same_v<T, EAdd>) {
                return e_add(subst_tvar_expr(n.lhs, alpha, r), subst_tvar_expr(n.rhs, alpha, r));
            } else {
                return e;
            }
        },
        e->node);
}

// ---------------------------------------------------------------------------
// Alpha equivalence
// ---------------------------------------------------------------------------

namespace {

struct AlphaCtx {
    std::vector<std::pair<Name, Name>> pairs;

    bool vars_eq(Name a, Name b) const {
        for (auto it = pairs.rbegin(); it != pairs.rend(); ++it) {
            if (it->first == a || it->second == b) return it->first == a && it->second == b;
        }
        return a == b;
    }

    struct Scope {
        AlphaCtx& ctx;
        Scope(AlphaCtx& c, Name a, Name b) : ctx(c) { ctx.pairs.emplace_back(a, b); }
        ~Scope() { ctx.pairs.pop_back(); }
    };
};

bool aeq_type(const TypeRef& a, const TypeRef& b, AlphaCtx& ctx);
bool aeq_value(const ValueRef& a, const ValueRef& b, AlphaCtx& ctx);
bool aeq_expr(const ExprRef& a, const ExprRef& b, AlphaCtx& ctx);

bool aeq_type(const TypeRef& a, const TypeRef& b, AlphaCtx& ctx) {
    if (a.get() == b.get()) return true;
    if (a->node.index() != b->node.index()) return false;
    return std::visit(
        [&](const auto& na) -> bool {
            using T = std::decay_t<decltype(na)>;
            const auto& nb = std::get<T>(b->node);
            if constexpr (std::is_same_v<T, TUnit> || std::is_same_v<T, TInt> ||
                          std::is_same_v<T, TNat> || std::is_same_v<T, TEnd>) {
                return true;
            } else if constexpr (std::is_same_v<T, TLabel>) {
                return na.set == nb.set;
            } else if constexpr (std::is_same_v<T, TEq>) {
                return aeq_type(na.index, nb.index, ctx) && aeq_value(na.lhs, nb.lhs, ctx) &&
                       aeq_value(na.rhs, nb.rhs, ctx);
            } else if constexpr (std::is_same_v<T, TCase>) {
                if (!aeq_value(na.scrutinee, nb.scrutinee, ctx)) return false;
                if (na.branches.size() != nb.branches.size()) return false;
                for (size_t i = 0; i < na.branches.size(); ++i) {
                    if (na.branches[i].first != nb.branches[i].first) return false;
                    if (!aeq_type(na.branches[i].second, nb.branches[i].second, ctx))
                        return false;
                }
                return true;
            } else if constexpr (std::is_same_v<T, TPi>) {
                if (na.mult != nb.mult || !aeq_type(na.dom, nb.dom, ctx)) return false;
                AlphaCtx::Scope s(ctx, na.binder, nb.binder);
                return aeq_type(na.cod, nb.cod, ctx);
            } else if constexpr (std::is_same_v<T, TSigma>) {
                if (!aeq_type(na.fst, nb.fst, ctx)) return false;
                AlphaCtx::Scope s(ctx, na.binder, nb.binder);
                return aeq_type(na.snd, nb.snd, ctx);
            } else if constexpr (std::is_same_v<T, TSend> || std::is_same_v<T, TRecv>) {
                if (!aeq_type(na.payload, nb.payload, ctx)) return false;
                AlphaCtx::Scope s(ctx, na.binder, nb.binder);
                return aeq_type(na.cont, nb.cont, ctx);
            } else if constexpr (std::is_same_v<T, TNatRec>) {
                if (!aeq_value(na.scrutinee, nb.scrutinee, ctx)) return false;
                if (!aeq_type(na.zero, nb.zero, ctx)) return false;
                AlphaCtx::Scope s(ctx, na.rec_var, nb.rec_var);
                return aeq_type(na.succ, nb.succ, ctx);
            } else if constexpr (std::is_same_v<T, TVar>) {
                return na.pol == nb.pol && ctx.vars_eq(na.name, nb.name);
            } else {
                return false;
            }
        },
        a->node);
}

bool aeq_value(const ValueRef& a, const ValueRef& b, AlphaCtx& ctx) {
    if (a.get() == b.get()) return true;
    if (a->node.index() != b->node.index()) return false;
    return std::visit(
        [&](const auto& na) -> bool {
            using T = std::decay_t<decltype(na)>;
            const auto& nb = std::get<T>(b->node);
            if constexpr (std::is_same_v<T, VVar>) {
                return ctx.vars_eq(na.name, nb.name);
            } else if constexpr (std::is_same_v<T, VChan>) {
                return na.endpoint == nb.endpoint;
            } else if constexpr (std::is_same_v<T, VLabel>) {
                return na.lab == nb.lab;
            } else if constexpr (std::is_same_v<T, VUnit> || std::is_same_v<T, VZero>) {
                return true;
            } else if constexpr (std::is_same_v<T, VLam>) {
                if (na.mult != nb.mult) return false;
                bool annots = (!na.annot && !nb.annot) ||
                              (na.annot && nb.annot && aeq_type(na.annot, nb.annot, ctx));
                if (!annots) return false;
                AlphaCtx::Scope s(ctx, na.binder, nb.binder);
                return aeq_expr(na.body, nb.body, ctx);
            } else if constexpr (std::is_same_v<T, VPair>) {
                bool annots = (!na.annot && !nb.annot) ||
                              (na.annot && nb.annot && aeq_type(na.annot, nb.annot, ctx));
                if (!annots || !aeq_value(na.fst, nb.fst, ctx)) return false;
                AlphaCtx::Scope s(ctx, na.binder, nb.binder);
                return aeq_value(na.snd, nb.snd, ctx);
            } else if constexpr (std::is_same_v<T, VSend>) {
                return aeq_value(na.chan, nb.chan, ctx);
            } else if constexpr (std::is_same_v<T, VSucc>) {
                return aeq_value(na.pred, nb.pred, ctx);
            } else if constexpr (std::is_same_v<T, VInt>) {
                return na.value == nb.value;
            } else {
                return false;
            }
        },
        a->node);
}

bool aeq_expr(const ExprRef& a, const ExprRef& b, AlphaCtx& ctx) {
    if (a.get() == b.get()) return true;
    if (a->node.index() != b->node.index()) return false;
    return std::visit(
        [&](const auto& na) -> bool {
            using T = std::decay_t<decltype(na)>;
            const auto& nb = std::get<T>(b->node);
            if constexpr (std::is_same_v<T, EVal>) {
                return aeq_value(na.val, nb.val, ctx);
            } else if constexpr (std::is_same_v<T, ECase>) {
                if (!aeq_value(na.scrutinee, nb.scrutinee, ctx)) return false;
                if (na.branches.size() != nb.branches.size()) return false;
                for (size_t i = 0; i < na.branches.size(); ++i) {
                    if (na.branches[i].first != nb.branches[i].first) return false;
                    if (!aeq_expr(na.branches[i].second, nb.branches[i].second, ctx))
                        return false;
                }
                return true;
            } else if constexpr (std::is_same_v<T, EApp>) {
                return aeq_expr(na.fn, nb.fn, ctx) && aeq_expr(na.arg, nb.arg, ctx);
            } else if constexpr (std::is_same_v<T, EPair>) {
                bool annots = (!na.annot && !nb.annot) ||
                              (na.annot && nb.annot && aeq_type(na.annot, nb.annot, ctx));
                if (!annots || !aeq_value(na.fst, nb.fst, ctx)) return false;
                AlphaCtx::Scope s(ctx, na.binder, nb.binder);
                return aeq_expr(na.snd, nb.snd, ctx);
            } else if constexpr (std::is_same_v<T, ELetPair>) {
                if (!aeq_expr(na.scrutinee, nb.scrutinee, ctx)) return false;
                AlphaCtx::Scope s1(ctx, na.fst, nb.fst);
                AlphaCtx::Scope s2(ctx, na.snd, nb.snd);
                return aeq_expr(na.body, nb.body, ctx);
            } else if constexpr (std::is_same_v<T, ELet>) {
                if (!aeq_expr(na.bound, nb.bound, ctx)) return false;
                AlphaCtx::Scope s(ctx, na.binder, nb.binder);
                return aeq_expr(na.body, nb.body, ctx);
            } else if constexpr (std::is_same_v<T, ENew>) {
                return aeq_type(na.session, nb.session, ctx);
            } else if constexpr (std::is_same_v<T, EFork>) {
                return aeq_expr(na.body, nb.body, ctx);
            } else if constexpr (std::is_same_v<T, ESend> || std::is_same_v<T, ERecv>) {
                return aeq_expr(na.chan, nb.chan, ctx);
            } else if constexpr (std::is_same_v<T, ENatRec>) {
                if (!aeq_value(na.scrutinee, nb.scrutinee, ctx)) return false;
                bool motives = (!na.motive && !nb.motive) ||
                               (na.motive && nb.motive && aeq_type(na.motive, nb.motive, ctx));
                if (!motives) return false;
                if (!aeq_expr(na.zero, nb.zero, ctx)) return false;
                AlphaCtx::Scope sp(ctx, na.pred_var, nb.pred_var);
                AlphaCtx::Scope sr(ctx, na.rec_var, nb.rec_var);
                return aeq_expr(na.succ, nb.succ, ctx);
            } else if constexpr (std::is_same_v<T, ENeg>) {
                return aeq_expr(na.arg, nb.arg, ctx);
            } else if constexpr (std::is_same_v<T, EAdd>) {
                return aeq_expr(na.lhs, nb.lhs, ctx) && aeq_expr(na.rhs, nb.rhs, ctx);
            } else {
                return false;
            }
        },
        a->node);
}

bool aeq_process(const ProcessRef& a, const ProcessRef& b, AlphaCtx& ctx) {
    if (a->node.index() != b->node.index()) return false;
    return std::visit(
        [&](const auto& na) -> bool {
            using T = std::decay_t<decltype(na)>;
            const auto& nb = std::get<T>(b->node);
            if constexpr (std::is_same_v<T, PExpr>) {
                return aeq_expr(na.body, nb.body, ctx);
            } else if constexpr (std::is_same_v<T, PPar>) {
                return aeq_process(na.left, nb.left, ctx) && aeq_process(na.right, nb.right, ctx);
            } else {
                if ((na.session == nullptr) != (nb.session == nullptr)) return false;
                if (na.session && !aeq_type(na.session, nb.session, ctx)) return false;
                AlphaCtx::Scope s1(ctx, na.left, nb.left);
                AlphaCtx::Scope s2(ctx, na.right, nb.right);
                return aeq_process(na.body, nb.body, ctx);
            }
        },
        a->node);
}

} // namespace

bool alpha_eq(const TypeRef& a, const TypeRef& b) {
    AlphaCtx ctx;
    return aeq_type(a, b, ctx);
}
bool alpha_eq(const ValueRef& a, const ValueRef& b) {
    AlphaCtx ctx;
    return aeq_value(a, b, ctx);
}
bool alpha_eq(const ExprRef& a, const ExprRef& b) {
    AlphaCtx ctx;
    return aeq_expr(a, b, ctx);
}
bool alpha_eq(const ProcessRef& a, const ProcessRef& b) {
    AlphaCtx ctx;
    return aeq_process(a, b, ctx);
}

ExprRef value_to_expr(const ValueRef& v) { return e_val(v); }

std::optional<ValueRef> expr_to_value(const ExprRef& e) {
    if (const auto* ev = std::get_if<EVal>(&e->node)) return ev->val;
    return std::nullopt;
}

std::optional<unsigned> nat_value(const ValueRef& v) {
    unsigned n = 0;
    const Value* cur = v.get();
    for (;;) {
        if (std::holds_alternative<VZero>(cur->node)) return n;
        if (const auto* s = std::get_if<VSucc>(&cur->node)) {
            ++n;
            cur = s->pred.get();
            continue;
        }
        return std::nullopt;
    }
}

} // namespace ldst
