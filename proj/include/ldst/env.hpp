#pragma once

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ldst/ast.hpp"

namespace ldst {

struct TermBind {
    Name name;
    TypeRef type;
};
struct TyVarBind {
    Name name;
    Kind kind;
};

struct EnvEntry {
    std::variant<TermBind, TyVarBind> entry;

    const Name& name() const {
        if (const auto* t = std::get_if<TermBind>(&entry)) return t->name;
        return std::get<TyVarBind>(entry).name;
    }
};

using KindOracle = std::function<Kind(const TypeRef&)>;

// Ordered telescope of bindings. Persistent: operations return new
// environments and never mutate in place.
class TypeEnv {
public:
    TypeEnv() = default;

    static TypeEnv empty() { return TypeEnv(); }

    TypeEnv bind(Name n, TypeRef t) const;
    TypeEnv bind_tyvar(Name n, Kind k) const;

    std::optional<TypeRef> lookup(Name n) const;
    std::optional<Kind> lookup_tyvar(Name n) const;
    bool bound(Name n) const;

    // Removes a term binding; throws Error{UnboundName} if absent.
    TypeEnv consume(Name n) const;

    // The unrestricted part: keeps bindings whose types kind un plus all type
    // variable entries. Idempotent.
    TypeEnv unr(const KindOracle& kind_of) const;

    // Merge of two split halves: shared entries must agree on alpha-equal
    // unrestricted types; a name that is linear on either side may appear on
    // that side only. Throws Error{JoinConflict}.
    static TypeEnv join(const TypeEnv& a, const TypeEnv& b, const KindOracle& kind_of);

    // Equality assumption scan: the most recent entry z : (x = W : A) for the
    // given variable x.
    std::optional<ValueRef> equation_for(Name x) const;

    const std::vector<EnvEntry>& entries() const { return entries_; }
    size_t size() const { return entries_.size(); }

    // Domain-set plus alpha-equality comparison, order-insensitive.
    static bool same_bindings(const TypeEnv& a, const TypeEnv& b);

    std::string dump() const; // one entry per line: `name : printed-type`

private:
    std::vector<EnvEntry> entries_;
};

} // namespace ldst
