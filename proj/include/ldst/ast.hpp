#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "ldst/error.hpp"

namespace ldst {

// ---------------------------------------------------------------------------
// Names, labels, multiplicities, kinds, polarities
// ---------------------------------------------------------------------------

// Interned identifier. Fresh names are derived from a base symbol and are
// guaranteed not to collide with any identifier seen so far.
struct Name {
    uint32_t id = 0;

    bool operator==(const Name&) const = default;
    auto operator<=>(const Name&) const = default;
    const std::string& str() const;
};

Name intern(const std::string& text);
Name fresh(const Name& base);
Name fresh(const std::string& base);

struct Label {
    uint32_t id = 0;

    bool operator==(const Label&) const = default;
    auto operator<=>(const Label&) const = default;
    const std::string& str() const;
};

Label label(const std::string& text);

// Non-empty finite set of labels, kept sorted by name text so that set
// comparison and printing are canonical.
class LabelSet {
public:
    LabelSet() = default;
    explicit LabelSet(std::vector<Label> ls);

    bool empty() const { return labels_.empty(); }
    size_t size() const { return labels_.size(); }
    bool contains(Label l) const;
    bool subset_of(const LabelSet& other) const;
    LabelSet intersect(const LabelSet& other) const;
    LabelSet unite(const LabelSet& other) const;
    const std::vector<Label>& labels() const { return labels_; }

    bool operator==(const LabelSet&) const = default;

private:
    std::vector<Label> labels_; // sorted by text
};

enum class Mult : uint8_t { Un, Lin };

inline bool mult_le(Mult a, Mult b) { return a == b || a == Mult::Un; }
inline Mult mult_join(Mult a, Mult b) { return (a == Mult::Lin || b == Mult::Lin) ? Mult::Lin : Mult::Un; }

enum class KindBase : uint8_t { Session, General };

struct Kind {
    KindBase base = KindBase::General;
    Mult mult = Mult::Un;

    bool operator==(const Kind&) const = default;

    static Kind un_session() { return {KindBase::Session, Mult::Un}; }
    static Kind lin_session() { return {KindBase::Session, Mult::Lin}; }
    static Kind un_general() { return {KindBase::General, Mult::Un}; }
    static Kind lin_general() { return {KindBase::General, Mult::Lin}; }
};

// session <= general, un <= lin, componentwise.
inline bool kind_le(Kind a, Kind b) {
    bool base_ok = a.base == b.base || a.base == KindBase::Session;
    return base_ok && mult_le(a.mult, b.mult);
}
inline Kind kind_join(Kind a, Kind b) {
    KindBase base = (a.base == KindBase::General || b.base == KindBase::General)
                        ? KindBase::General
                        : KindBase::Session;
    return {base, mult_join(a.mult, b.mult)};
}

std::string kind_to_string(Kind k);

enum class Polarity : uint8_t { Pos, Neg };

inline Polarity flip(Polarity p) { return p == Polarity::Pos ? Polarity::Neg : Polarity::Pos; }

// ---------------------------------------------------------------------------
// Types, values, expressions, processes
// ---------------------------------------------------------------------------

struct Type;
struct Value;
struct Expr;
struct Process;
using TypeRef = std::shared_ptr<const Type>;
using ValueRef = std::shared_ptr<const Value>;
using ExprRef = std::shared_ptr<const Expr>;
using ProcessRef = std::shared_ptr<const Process>;

// Type alternatives. All nodes are immutable after construction.
struct TUnit {};
struct TInt {};
struct TNat {};
struct TEnd {};
struct TLabel {
    LabelSet set;
};
struct TEq {
    TypeRef index; // the type the witnesses live at (a label set or Nat)
    ValueRef lhs;
    ValueRef rhs;
};
struct TCase {
    ValueRef scrutinee;
    std::vector<std::pair<Label, TypeRef>> branches; // sorted by label
};
struct TPi {
    Mult mult;
    Name binder;
    TypeRef dom;
    TypeRef cod;
};
struct TSigma {
    Name binder;
    TypeRef fst;
    TypeRef snd;
};
struct TSend {
    Name binder;
    TypeRef payload;
    TypeRef cont;
};
struct TRecv {
    Name binder;
    TypeRef payload;
    TypeRef cont;
};
struct TNatRec {
    ValueRef scrutinee;
    TypeRef zero;
    Name rec_var;
    Kind kind; // annotation from Fig. 9; ignored by alpha_eq
    TypeRef succ;
};
struct TVar {
    Name name;
    Polarity pol;
};

struct Type {
    std::variant<TUnit, TInt, TNat, TEnd, TLabel, TEq, TCase, TPi, TSigma,
                 TSend, TRecv, TNatRec, TVar>
        node;
    SourcePos pos;
};

// Value alternatives.
struct VVar {
    Name name;
};
struct VChan {
    int endpoint; // runtime channel endpoint
};
struct VLabel {
    Label lab;
};
struct VUnit {};
struct VLam {
    Mult mult;
    Name binder;
    TypeRef annot;
    ExprRef body;
};
struct VPair {
    Name binder;
    TypeRef annot; // may be null: synthesized from the first component
    ValueRef fst;
    ValueRef snd;
};
struct VSend {
    ValueRef chan; // partially applied send
};
struct VZero {};
struct VSucc {
    ValueRef pred;
};
struct VInt {
    long long value;
};

struct Value {
    std::variant<VVar, VChan, VLabel, VUnit, VLam, VPair, VSend, VZero, VSucc, VInt> node;
    SourcePos pos;
};

// Expression alternatives.
struct EVal {
    ValueRef val;
};
struct ECase {
    ValueRef scrutinee;
    std::vector<std::pair<Label, ExprRef>> branches; // sorted by label
};
struct EApp {
    ExprRef fn;
    ExprRef arg;
};
struct EPair {
    Name binder;
    TypeRef annot; // may be null
    ValueRef fst;
    ExprRef snd;
};
struct ELetPair {
    Name fst;
    Name snd;
    ExprRef scrutinee;
    ExprRef body;
};
struct ELet { // primitive sequencing form
    Name binder;
    ExprRef bound;
    ExprRef body;
};
struct ENew {
    TypeRef session;
};
struct EFork {
    ExprRef body;
};
struct ESend {
    ExprRef chan;
};
struct ERecv {
    ExprRef chan;
};
struct ENatRec {
    ValueRef scrutinee;
    TypeRef motive;  // type of the whole expression; may mention the scrutinee variable
    ExprRef zero;
    Name pred_var;   // x in the successor arm
    Name tyvar;      // recursion type variable named in the annotation
    Name rec_var;    // y, the result of the predecessor iteration
    TypeRef rec_annot; // declared type of y, mentions tyvar
    ExprRef succ;
};
struct ENeg {
    ExprRef arg;
};
struct EAdd {
    ExprRef lhs;
    ExprRef rhs;
};

struct Expr {
    std::variant<EVal, ECase, EApp, EPair, ELetPair, ELet, ENew, EFork, ESend,
                 ERecv, ENatRec, ENeg, EAdd>
        node;
    SourcePos pos;
};

// Process soup terms.
struct PExpr {
    ExprRef body;
};
struct PPar {
    ProcessRef left;
    ProcessRef right;
};
struct PNu {
    Name left;
    Name right;
    TypeRef session; // type of the left endpoint; may be null for untyped soups
    ProcessRef body;
};

struct Process {
    std::variant<PExpr, PPar, PNu> node;
};

// ---------------------------------------------------------------------------
// Constructors
// ---------------------------------------------------------------------------

TypeRef t_unit();
TypeRef t_int();
TypeRef t_nat();
TypeRef t_end();
TypeRef t_label(LabelSet ls);
TypeRef t_eq(TypeRef index, ValueRef lhs, ValueRef rhs);
TypeRef t_case(ValueRef scrutinee, std::vector<std::pair<Label, TypeRef>> branches);
TypeRef t_pi(Mult m, Name binder, TypeRef dom, TypeRef cod);
TypeRef t_sigma(Name binder, TypeRef fst, TypeRef snd);
TypeRef t_send(Name binder, TypeRef payload, TypeRef cont);
TypeRef t_recv(Name binder, TypeRef payload, TypeRef cont);
TypeRef t_natrec(ValueRef scrutinee, TypeRef zero, Name rec_var, Kind kind, TypeRef succ);
TypeRef t_var(Name name, Polarity pol);

ValueRef v_var(Name n);
ValueRef v_chan(int endpoint);
ValueRef v_label(Label l);
ValueRef v_unit();
ValueRef v_lam(Mult m, Name binder, TypeRef annot, ExprRef body);
ValueRef v_pair(Name binder, TypeRef annot, ValueRef fst, ValueRef snd);
ValueRef v_send(ValueRef chan);
ValueRef v_zero();
ValueRef v_succ(ValueRef pred);
ValueRef v_nat(unsigned n);
ValueRef v_int(long long v);

ExprRef e_val(ValueRef v);
ExprRef e_var(Name n);
ExprRef e_case(ValueRef scrutinee, std::vector<std::pair<Label, ExprRef>> branches);
ExprRef e_app(ExprRef fn, ExprRef arg);
ExprRef e_pair(Name binder, TypeRef annot, ValueRef fst, ExprRef snd);
ExprRef e_letpair(Name fst, Name snd, ExprRef scrutinee, ExprRef body);
ExprRef e_let(Name binder, ExprRef bound, ExprRef body);
ExprRef e_new(TypeRef session);
ExprRef e_fork(ExprRef body);
ExprRef e_send(ExprRef chan);
ExprRef e_recv(ExprRef chan);
ExprRef e_natrec(ValueRef scrutinee, TypeRef motive, ExprRef zero, Name pred_var,
                 Name tyvar, Name rec_var, TypeRef rec_annot, ExprRef succ);
ExprRef e_neg(ExprRef arg);
ExprRef e_add(ExprRef lhs, ExprRef rhs);

ProcessRef p_expr(ExprRef e);
ProcessRef p_par(ProcessRef l, ProcessRef r);
ProcessRef p_nu(Name l, Name r, TypeRef session, ProcessRef body);

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

// The session fragment: End, send, receive, case/natrec over session arms,
// and polarized type variables.
bool is_session(const TypeRef& t);

// Session-type duality; throws Error{NotASessionType} outside the fragment.
TypeRef dual(const TypeRef& t);

// Capture-avoiding substitution of a value for a free variable.
TypeRef subst_type(const TypeRef& t, Name x, const ValueRef& v);
ValueRef subst_value(const ValueRef& w, Name x, const ValueRef& v);
ExprRef subst_expr(const ExprRef& e, Name x, const ValueRef& v);

// Substitution of a type for a (positively occurring) type variable. Negative
// occurrences receive the dual of the replacement.
TypeRef subst_tvar(const TypeRef& t, Name alpha, const TypeRef& r);
ExprRef subst_tvar_expr(const ExprRef& e, Name alpha, const TypeRef& r);

// Free term variables.
std::set<Name> free_vars(const TypeRef& t);
std::set<Name> free_vars(const ValueRef& v);
std::set<Name> free_vars(const ExprRef& e);
bool occurs_free(const TypeRef& t, Name x);
bool tvar_occurs(const TypeRef& t, Name alpha);

// Alpha-equivalence (label sets as sets, natrec kind annotations ignored).
bool alpha_eq(const TypeRef& a, const TypeRef& b);
bool alpha_eq(const ValueRef& a, const ValueRef& b);
bool alpha_eq(const ExprRef& a, const ExprRef& b);
bool alpha_eq(const ProcessRef& a, const ProcessRef& b);

// Total injection Value -> Expr and its partial inverse.
ExprRef value_to_expr(const ValueRef& v);
std::optional<ValueRef> expr_to_value(const ExprRef& e);

// Numeral helpers.
std::optional<unsigned> nat_value(const ValueRef& v);

} // namespace ldst
