#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ldst/ast.hpp"
#include "ldst/env.hpp"
#include "ldst/parser.hpp"

namespace ldst {

struct SynthResult {
    TypeRef type;
    TypeEnv out; // unconsumed resources; a sub-telescope of the input
};

struct DefReport {
    std::string name;
    bool ok = true;
    ErrCode code = ErrCode::None;
    std::string message;
    SourcePos pos;
    std::vector<std::string> trace;
};

struct Report {
    std::vector<DefReport> defs;
    std::vector<std::string> lints;

    bool all_ok() const {
        for (const auto& d : defs)
            if (!d.ok) return false;
        return true;
    }
    std::string render_text() const;
    std::string render_json() const;
};

struct CheckOptions {
    int natrec_fuel = 128;
    bool keep_going = true; // per-definition error recovery in check_program
};

// The bidirectional checker with input/output environments. Synthesis returns
// the least type plus the environment of unconsumed resources; checking
// returns the latter. Failures raise Error with a judgment trace.
class Checker {
public:
    explicit Checker(CheckOptions opts = {});

    // Resolves a value to its head form (a label or numeral) by following
    // equality assumptions; nullopt when no equation applies.
    std::optional<ValueRef> convert_value(const TypeEnv& env, const ValueRef& v);

    // Exposes the top-level non-case, non-reducible-recursor constructor.
    TypeRef unfold(const TypeEnv& env, const TypeRef& t);

    Kind kind_synth(const TypeEnv& env, const TypeRef& t);
    void kind_check(const TypeEnv& env, const TypeRef& t, Kind k);

    TypeEnv cond_extend(const TypeEnv& env, Name x, const TypeRef& t);

    Kind sub_synth(const TypeEnv& env, const TypeRef& a, const TypeRef& b);
    void sub_check(const TypeEnv& env, const TypeRef& a, const TypeRef& b, Kind k);

    SynthResult type_synth(const TypeEnv& env, const ExprRef& e);
    TypeEnv type_check(const TypeEnv& env, const ExprRef& e, const TypeRef& t);

    void check_process(const TypeEnv& env, const ProcessRef& p);

    Report check_program(const Program& prog);

    TypeEnv unrestricted(const TypeEnv& env);
    KindOracle kind_oracle(const TypeEnv& env);

    const std::vector<std::string>& lints() const { return lints_; }

private:
    struct Rule; // trace frame

    CheckOptions opts_;
    std::vector<std::string> trace_;
    std::vector<std::string> lints_;
    std::vector<std::pair<Name, Name>> tvar_sync_;
    int fuel_ = 0;

    [[noreturn]] void fail(ErrCode code, const std::string& msg, SourcePos pos = {});

    void spend_fuel(const std::string& where);
    TypeRef unroll_natrec_succ(const TNatRec& r, const ValueRef& pred);
    TypeRef unfold_with_fuel(const TypeEnv& env, const TypeRef& t);
    bool tvars_synced(Name a, Name b) const;

    Kind sub_dispatch(const TypeEnv& env, const TypeRef& a, const TypeRef& b);
    Kind sub_structural(const TypeEnv& env, const TypeRef& a, const TypeRef& b);
    LabelSet scrutinee_label_set(const TypeEnv& env, const ValueRef& v);

    SynthResult synth_value(const TypeEnv& env, const ValueRef& v);
    SynthResult synth_case(const TypeEnv& env, const ECase& c, const TypeRef* expected);
    SynthResult synth_natrec(const TypeEnv& env, const ENatRec& r, SourcePos pos);
    SynthResult synth_letpair(const TypeEnv& env, const ELetPair& lp, const TypeRef* expected,
                              SourcePos pos);
    TypeEnv drop_binding(const TypeEnv& env, Name x, SourcePos pos);
    void check_branch_envs_agree(const std::vector<TypeEnv>& envs,
                                 const std::vector<Label>& labels, SourcePos pos);
};

} // namespace ldst
