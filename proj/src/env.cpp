#include "ldst/env.hpp"

#include <algorithm>

#include "ldst/pretty.hpp"

namespace ldst {

TypeEnv TypeEnv::bind(Name n, TypeRef t) const {
    TypeEnv out = *this;
    out.entries_.push_back(EnvEntry{TermBind{n, std::move(t)}});
    return out;
}

TypeEnv TypeEnv::bind_tyvar(Name n, Kind k) const {
    TypeEnv out = *this;
    out.entries_.push_back(EnvEntry{TyVarBind{n, k}});
    return out;
}

std::optional<TypeRef> TypeEnv::lookup(Name n) const {
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
        if (const auto* t = std::get_if<TermBind>(&it->entry)) {
            if (t->name == n) return t->type;
        }
    }
    return std::nullopt;
}

std::optional<Kind> TypeEnv::lookup_tyvar(Name n) const {
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
        if (const auto* t = std::get_if<TyVarBind>(&it->entry)) {
            if (t->name == n) return t->kind;
        }
    }
    return std::nullopt;
}

bool TypeEnv::bound(Name n) const {
    for (const auto& e : entries_)
        if (e.name() == n) return true;
    return false;
}

TypeEnv TypeEnv::consume(Name n) const {
    TypeEnv out;
    bool found = false;
    for (const auto& e : entries_) {
        if (!found && std::holds_alternative<TermBind>(e.entry) && e.name() == n) {
            found = true;
            continue;
        }
        out.entries_.push_back(e);
    }
    if (!found)
        throw Error(ErrCode::UnboundName, "cannot consume unbound name " + n.str());
    return out;
}

TypeEnv TypeEnv::unr(const KindOracle& kind_of) const {
    TypeEnv out;
    for (const auto& e : entries_) {
        if (const auto* t = std::get_if<TermBind>(&e.entry)) {
            if (kind_of(t->type).mult == Mult::Un) out.entries_.push_back(e);
        } else {
            out.entries_.push_back(e);
        }
    }
    return out;
}

TypeEnv TypeEnv::join(const TypeEnv& a, const TypeEnv& b, const KindOracle& kind_of) {
    TypeEnv out = a;
    for (const auto& e : b.entries_) {
        if (const auto* t = std::get_if<TermBind>(&e.entry)) {
            if (auto prev = out.lookup(t->name)) {
                bool both_un = kind_of(*prev).mult == Mult::Un &&
                               kind_of(t->type).mult == Mult::Un;
                if (!both_un)
                    throw Error(ErrCode::JoinConflict,
                                "linear binding " + t->name.str() + " on both sides");
                if (!alpha_eq(*prev, t->type))
                    throw Error(ErrCode::JoinConflict,
                                "types for " + t->name.str() + " disagree");
                continue; // shared unrestricted entry
            }
            out.entries_.push_back(e);
        } else {
            if (!out.lookup_tyvar(e.name())) out.entries_.push_back(e);
        }
    }
    return out;
}

std::optional<ValueRef> TypeEnv::equation_for(Name x) const {
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
        const auto* t = std::get_if<TermBind>(&it->entry);
        if (!t) continue;
        const auto* eq = std::get_if<TEq>(&t->type->node);
        if (!eq) continue;
        if (const auto* lv = std::get_if<VVar>(&eq->lhs->node)) {
            if (lv->name == x) return eq->rhs;
        }
    }
    return std::nullopt;
}

bool TypeEnv::same_bindings(const TypeEnv& a, const TypeEnv& b) {
    if (a.entries_.size() != b.entries_.size()) return false;
    for (const auto& e : a.entries_) {
        if (const auto* t = std::get_if<TermBind>(&e.entry)) {
            auto other = b.lookup(t->name);
            if (!other || !alpha_eq(*other, t->type)) return false;
        } else {
            if (!b.lookup_tyvar(e.name())) return false;
        }
    }
    return true;
}

std::string TypeEnv::dump() const {
    std::string out;
    for (const auto& e : entries_) {
        if (const auto* t = std::get_if<TermBind>(&e.entry)) {
            out += t->name.str() + " : " + print_type(t->type) + "\n";
        } else {
            const auto& tv = std::get<TyVarBind>(e.entry);
            out += tv.name.str() + " : tyvar " + kind_to_string(tv.kind) + "\n";
        }
    }
    return out;
}

} // namespace ldst
