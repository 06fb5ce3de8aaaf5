#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ldst/ast.hpp"
#include "ldst/parser.hpp"

namespace ldst {

// Runtime values.
struct RtValue;
using RtRef = std::shared_ptr<const RtValue>;

struct RUnit {};
struct RLabel {
    Label lab;
};
struct RInt {
    long long value;
};
struct RNat {
    unsigned value;
};
struct RChan {
    int endpoint;
};
struct RClosure {
    Mult mult;
    Name binder;
    TypeRef annot;
    ExprRef body;
    std::shared_ptr<const struct RtEnv> captured;
};
struct RPair {
    RtRef fst;
    RtRef snd;
};
struct RSendPartial {
    int endpoint;
};
// Pending recursor value: unrolls when eliminated.
struct RRec {
    unsigned level;
    ExprRef zero;
    Name pred_var;
    Name rec_var;
    ExprRef succ;
    std::shared_ptr<const struct RtEnv> captured;
};

struct RtValue {
    std::variant<RUnit, RLabel, RInt, RNat, RChan, RClosure, RPair, RSendPartial, RRec> node;
};

// Persistent environment of runtime bindings.
struct RtEnv {
    Name name;
    RtRef value;
    std::shared_ptr<const RtEnv> next;

    static std::shared_ptr<const RtEnv> bind(std::shared_ptr<const RtEnv> env, Name n, RtRef v) {
        return std::make_shared<const RtEnv>(RtEnv{n, std::move(v), std::move(env)});
    }
    static const RtRef* lookup(const std::shared_ptr<const RtEnv>& env, Name n) {
        for (const RtEnv* e = env.get(); e; e = e->next.get())
            if (e->name == n) return &e->value;
        return nullptr;
    }
};
using RtEnvRef = std::shared_ptr<const RtEnv>;

std::string print_rtvalue(const RtRef& v);
bool rtvalue_eq(const RtRef& a, const RtRef& b);

// Continuation frames, mirroring the evaluation context grammar.
struct FAppFn { // evaluating the function, argument pending
    ExprRef arg;
    RtEnvRef env;
};
struct FAppArg { // evaluating the argument
    RtRef fn;
};
struct FPairSnd {
    RtRef fst;
};
struct FLetPair {
    Name fst;
    Name snd;
    ExprRef body;
    RtEnvRef env;
};
struct FLet {
    Name binder;
    ExprRef body;
    RtEnvRef env;
};
struct FSend {};
struct FRecv {};
struct FNeg {};
struct FAddL {
    ExprRef rhs;
    RtEnvRef env;
};
struct FAddR {
    RtRef lhs;
};

using Frame = std::variant<FAppFn, FAppArg, FPairSnd, FLetPair, FLet, FSend, FRecv, FNeg, FAddL,
                           FAddR>;

enum class BlockDir { SendSide, RecvSide };

struct Thread {
    int id = 0;
    // Control: either an expression to evaluate or a value being returned.
    std::optional<std::pair<ExprRef, RtEnvRef>> control;
    RtRef value;
    std::vector<Frame> frames;
    // Set when blocked on a rendezvous.
    std::optional<BlockDir> blocked;
    int blocked_endpoint = -1;
    RtRef pending_payload;
    bool finished = false;
};

struct ChannelInfo {
    int peer = -1;
    TypeRef session; // current session type when typed replay is on
    Name display;    // name used when rendering configurations
    bool closed = false;
};

enum class OutcomeKind { AllFinished, Deadlocked, Stuck, OutOfFuel };

struct Outcome {
    OutcomeKind kind;
    std::string detail;
    std::map<int, RtRef> results; // thread id -> final value
    RtRef main_result;            // value of thread 0
    long steps = 0;
};

struct EvalOptions {
    long max_steps = 100000;
    bool typed_replay = false;
    bool trace = false;
    std::optional<unsigned> seed; // randomized scheduling for stress tests
    std::function<void(const std::string&)> trace_sink;
    // invoked after each step when typed_replay is on
    std::function<void(const struct Config&)> replay_hook;
};

class Config {
public:
    Config() = default;

    // Builds the initial configuration for an expression under the bindings
    // of the program's earlier definitions.
    static Config boot(const Program& prog, const ExprRef& entry, EvalOptions opts = {});

    // One deterministic step. Returns false when no step is possible.
    bool step();
    Outcome run();

    const std::vector<Thread>& threads() const { return threads_; }
    const std::map<int, ChannelInfo>& channels() const { return channels_; }
    long steps_taken() const { return steps_; }
    const std::string& last_rule() const { return last_rule_; }

    // Renders the running state as a process soup: threads become expression
    // processes under their reconstructed evaluation contexts, live channels
    // become Nu binders annotated with their current session types.
    ProcessRef render() const;

    // Raised on runtime errors that well-typed programs never exhibit.
    struct StuckError {
        int thread;
        std::string reason;
    };

private:
    friend class Simulator;

    std::vector<Thread> threads_;
    std::map<int, ChannelInfo> channels_;
    int next_endpoint_ = 0;
    int next_thread_ = 0;
    long steps_ = 0;
    std::string last_rule_;
    EvalOptions opts_;
    std::optional<StuckError> stuck_;
    unsigned long long rng_state_ = 0;

    bool step_thread(Thread& t);    // one pure step; false if blocked/finished
    bool try_rendezvous();          // match two blocked threads
    void return_value(Thread& t, RtRef v);
    void enter(Thread& t, const ExprRef& e, const RtEnvRef& env);
    void block(Thread& t, BlockDir dir, int endpoint, RtRef payload);
    [[noreturn]] void stuck(Thread& t, const std::string& reason);
    void apply(Thread& t, const RtRef& fn, const RtRef& arg);
    void unroll_rec(Thread& t, const RRec& rec);
    void gc_threads();
    void advance_session(int endpoint, const RtRef& payload);
    static ValueRef payload_syntax(const RtRef& payload);
    ValueRef value_syntax(const RtRef& v) const;
    ExprRef close_expr(const ExprRef& e, const RtEnvRef& env, Name skip) const;
    void note(const std::string& rule, int a, int b = -1);
};

// Evaluates `main` of a checked program.
Outcome run_program(const Program& prog, EvalOptions opts = {});

} // namespace ldst
