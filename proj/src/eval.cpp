#include "ldst/eval.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "ldst/pretty.hpp"

namespace ldst {

namespace {

template <typename N> RtRef mk(N&& n) {
    return std::make_shared<const RtValue>(RtValue{std::forward<N>(n)});
}

RtRef rt_unit() {
    static RtRef v = mk(RUnit{});
    return v;
}

struct EvalStuck {
    std::string reason;
};

// Total on syntactic values; throws EvalStuck on unbound names.
RtRef eval_value(const ValueRef& v, const RtEnvRef& env) {
    return std::visit(
        [&](const auto& n) -> RtRef {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, VVar>) {
                if (const RtRef* r = RtEnv::lookup(env, n.name)) return *r;
                throw EvalStuck{"unbound name " + n.name.str()};
            } else if constexpr (std::is_same_v<T, VChan>) {
                return mk(RChan{n.endpoint});
            } else if constexpr (std::is_same_v<T, VLabel>) {
                return mk(RLabel{n.lab});
            } else if constexpr (std::is_same_v<T, VUnit>) {
                return rt_unit();
            } else if constexpr (std::is_same_v<T, VLam>) {
                return mk(RClosure{n.mult, n.binder, n.annot, n.body, env});
            } else if constexpr (std::is_same_v<T, VPair>) {
                RtRef fst = eval_value(n.fst, env);
                RtEnvRef env2 = RtEnv::bind(env, n.binder, fst);
                return mk(RPair{fst, eval_value(n.snd, env2)});
            } else if constexpr (std::is_same_v<T, VSend>) {
                RtRef chan = eval_value(n.chan, env);
                const auto* c = std::get_if<RChan>(&chan->node);
                if (!c) throw EvalStuck{"send applied to a non-channel"};
                return mk(RSendPartial{c->endpoint});
            } else if constexpr (std::is_same_v<T, VZero>) {
                return mk(RNat{0});
            } else if constexpr (std::is_same_v<T, VSucc>) {
                RtRef p = eval_value(n.pred, env);
                const auto* pn = std::get_if<RNat>(&p->node);
                if (!pn) throw EvalStuck{"successor of a non-number"};
                return mk(RNat{pn->value + 1});
            } else {
                return mk(RInt{n.value});
            }
        },
        v->node);
}

} // namespace

std::string print_rtvalue(const RtRef& v) {
    return std::visit(
        [&](const auto& n) -> std::string {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, RUnit>) {
                return "()";
            } else if constexpr (std::is_same_v<T, RLabel>) {
                return n.lab.str();
            } else if constexpr (std::is_same_v<T, RInt>) {
                return std::to_string(n.value);
            } else if constexpr (std::is_same_v<T, RNat>) {
                return "nat " + std::to_string(n.value);
            } else if constexpr (std::is_same_v<T, RChan>) {
                return "#chan" + std::to_string(n.endpoint);
            } else if constexpr (std::is_same_v<T, RClosure>) {
                return "<function>";
            } else if constexpr (std::is_same_v<T, RPair>) {
                return "<" + print_rtvalue(n.fst) + ", " + print_rtvalue(n.snd) + ">";
            } else if constexpr (std::is_same_v<T, RSendPartial>) {
                return "<send #chan" + std::to_string(n.endpoint) + ">";
            } else {
                return "<recursor>";
            }
        },
        v->node);
}

bool rtvalue_eq(const RtRef& a, const RtRef& b) {
    if (a->node.index() != b->node.index()) return false;
    return std::visit(
        [&](const auto& na) -> bool {
            using T = std::decay_t<decltype(na)>;
            const auto& nb = std::get<T>(b->node);
            if constexpr (std::is_same_v<T, RUnit>) {
                return true;
            } else if constexpr (std::is_same_v<T, RLabel>) {
                return na.lab == nb.lab;
            } else if constexpr (std::is_same_v<T, RInt>) {
                return na.value == nb.value;
            } else if constexpr (std::is_same_v<T, RNat>) {
                return na.value == nb.value;
            } else if constexpr (std::is_same_v<T, RChan>) {
                return na.endpoint == nb.endpoint;
            } else if constexpr (std::is_same_v<T, RPair>) {
                return rtvalue_eq(na.fst, nb.fst) && rtvalue_eq(na.snd, nb.snd);
            } else if constexpr (std::is_same_v<T, RSendPartial>) {
                return na.endpoint == nb.endpoint;
            } else {
                return false;
            }
        },
        a->node);
}

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

void Config::note(const std::string& rule, int a, int b) {
    last_rule_ = rule;
    if (opts_.trace && opts_.trace_sink) {
        std::ostringstream os;
        os << "step " << steps_ << ": " << rule << " thread " << a;
        if (b >= 0) os << " " << b;
        opts_.trace_sink(os.str());
    }
}

void Config::stuck(Thread& t, const std::string& reason) {
    stuck_ = StuckError{t.id, reason};
    throw EvalStuck{reason};
}

void Config::enter(Thread& t, const ExprRef& e, const RtEnvRef& env) {
    t.control = std::make_pair(e, env);
    t.value = nullptr;
}

void Config::return_value(Thread& t, RtRef v) {
    t.control.reset();
    t.value = std::move(v);
}

void Config::block(Thread& t, BlockDir dir, int endpoint, RtRef payload) {
    for (const Thread& other : threads_) {
        if (other.id != t.id && other.blocked && other.blocked_endpoint == endpoint)
            stuck(t, "two threads access the same channel endpoint");
    }
    t.blocked = dir;
    t.blocked_endpoint = endpoint;
    t.pending_payload = std::move(payload);
    t.control.reset();
    t.value = nullptr;
}

Config Config::boot(const Program& prog, const ExprRef& entry, EvalOptions opts) {
    Config cfg;
    cfg.opts_ = std::move(opts);
    cfg.rng_state_ = cfg.opts_.seed ? *cfg.opts_.seed + 0x9e3779b97f4a7c15ull : 0;
    RtEnvRef env;
    Name main_name = intern("main");
    for (const auto& def : prog.term_defs) {
        if (def.name == main_name) continue;
        if (auto v = expr_to_value(def.body)) {
            env = RtEnv::bind(env, def.name, eval_value(*v, env));
            continue;
        }
        // a non-value definition is evaluated by a private effect-free run
        Config sub;
        sub.opts_.max_steps = cfg.opts_.max_steps;
        Thread t;
        t.id = 0;
        t.control = std::make_pair(def.body, env);
        sub.threads_.push_back(std::move(t));
        sub.next_thread_ = 1;
        Outcome out = sub.run();
        if (out.kind != OutcomeKind::AllFinished || !out.main_result)
            throw EvalStuck{"top-level definition " + def.name.str() + " does not evaluate"};
        env = RtEnv::bind(env, def.name, out.main_result);
    }
    Thread t;
    t.id = cfg.next_thread_++;
    t.control = std::make_pair(entry, env);
    cfg.threads_.push_back(std::move(t));
    return cfg;
}

void Config::advance_session(int endpoint, const RtRef& payload) {
    auto it = channels_.find(endpoint);
    if (it == channels_.end() || !it->second.session) return;
    ChannelInfo& info = it->second;
    TypeRef head = info.session;
    // The stored type may hide the communication under case types; resolve
    // them once the payload is known.
    for (int guard = 0; guard < 64; ++guard) {
        if (const auto* s = std::get_if<TSend>(&head->node)) {
            TypeRef cont = s->cont;
            if (occurs_free(cont, s->binder)) {
                if (ValueRef pv = payload_syntax(payload)) {
                    cont = subst_type(cont, s->binder, pv);
                }
            }
            info.session = cont;
            if (std::holds_alternative<TEnd>(cont->node)) info.closed = true;
            return;
        }
        if (const auto* r = std::get_if<TRecv>(&head->node)) {
            TypeRef cont = r->cont;
            if (occurs_free(cont, r->binder)) {
                if (ValueRef pv = payload_syntax(payload)) {
                    cont = subst_type(cont, r->binder, pv);
                }
            }
            info.session = cont;
            if (std::holds_alternative<TEnd>(cont->node)) info.closed = true;
            return;
        }
        if (const auto* c = std::get_if<TCase>(&head->node)) {
            const auto* lab = std::get_if<VLabel>(&c->scrutinee->node);
            if (!lab) return;
            bool found = false;
            for (const auto& [l, b] : c->branches) {
                if (l == lab->lab) {
                    head = b;
                    found = true;
                    break;
                }
            }
            if (!found) return;
            continue;
        }
        if (const auto* nr = std::get_if<TNatRec>(&head->node)) {
            if (auto n = nat_value(nr->scrutinee)) {
                if (*n == 0) {
                    head = nr->zero;
                } else {
                    TypeRef at_pred =
                        t_natrec(v_nat(*n - 1), nr->zero, nr->rec_var, nr->kind, nr->succ);
                    head = subst_tvar(nr->succ, nr->rec_var, at_pred);
                }
                continue;
            }
            return;
        }
        return;
    }
}

ValueRef Config::payload_syntax(const RtRef& payload) {
    if (const auto* lab = std::get_if<RLabel>(&payload->node)) return v_label(lab->lab);
    if (const auto* nat = std::get_if<RNat>(&payload->node)) return v_nat(nat->value);
    if (const auto* iv = std::get_if<RInt>(&payload->node)) return v_int(iv->value);
    if (std::holds_alternative<RUnit>(payload->node)) return v_unit();
    return nullptr;
}

bool Config::step_thread(Thread& t) {
    // Micro-transitions until one reduction fires. Frame bookkeeping does not
    // count as a step.
    for (;;) {
        if (t.finished || t.blocked) return false;
        if (t.control) {
            const ExprRef e = t.control->first;
            const RtEnvRef env = t.control->second;
            bool reduced = std::visit(
                [&](const auto& n) -> bool {
                    using T = std::decay_t<decltype(n)>;
                    if constexpr (std::is_same_v<T, EVal>) {
                        return_value(t, eval_value(n.val, env));
                        return false;
                    } else if constexpr (std::is_same_v<T, ECase>) {
                        RtRef scrut = eval_value(n.scrutinee, env);
                        const auto* lab = std::get_if<RLabel>(&scrut->node);
                        if (!lab) stuck(t, "case on a non-label value");
                        for (const auto& [l, b] : n.branches) {
                            if (l == lab->lab) {
                                enter(t, b, env);
                                note("Rl-Case", t.id);
                                return true;
                            }
                        }
                        stuck(t, "label " + lab->lab.str() + " not in case branches");
                        return false;
                    } else if constexpr (std::is_same_v<T, EApp>) {
                        t.frames.push_back(FAppFn{n.arg, env});
                        enter(t, n.fn, env);
                        return false;
                    } else if constexpr (std::is_same_v<T, EPair>) {
                        RtRef fst = eval_value(n.fst, env);
                        RtEnvRef env2 = RtEnv::bind(env, n.binder, fst);
                        t.frames.push_back(FPairSnd{fst});
                        enter(t, n.snd, env2);
                        return false;
                    } else if constexpr (std::is_same_v<T, ELetPair>) {
                        t.frames.push_back(FLetPair{n.fst, n.snd, n.body, env});
                        enter(t, n.scrutinee, env);
                        return false;
                    } else if constexpr (std::is_same_v<T, ELet>) {
                        t.frames.push_back(FLet{n.binder, n.body, env});
                        enter(t, n.bound, env);
                        return false;
                    } else if constexpr (std::is_same_v<T, ENew>) {
                        int c = next_endpoint_++;
                        int d = next_endpoint_++;
                        ChannelInfo ci, di;
                        ci.peer = d;
                        di.peer = c;
                        ci.display = fresh("ch");
                        di.display = fresh("ch");
                        if (opts_.typed_replay) {
                            ci.session = n.session;
                            di.session = dual(n.session);
                        }
                        channels_[c] = ci;
                        channels_[d] = di;
                        return_value(t, mk(RPair{mk(RChan{c}), mk(RChan{d})}));
                        note("Rl-New", t.id);
                        return true;
                    } else if constexpr (std::is_same_v<T, EFork>) {
                        Thread child;
                        child.id = next_thread_++;
                        child.control = std::make_pair(n.body, env);
                        int cid = child.id;
                        threads_.push_back(std::move(child));
                        return_value(t, rt_unit());
                        note("Rl-Fork", t.id, cid);
                        return true;
                    } else if constexpr (std::is_same_v<T, ESend>) {
                        t.frames.push_back(FSend{});
                        enter(t, n.chan, env);
                        return false;
                    } else if constexpr (std::is_same_v<T, ERecv>) {
                        t.frames.push_back(FRecv{});
                        enter(t, n.chan, env);
                        return false;
                    } else if constexpr (std::is_same_v<T, ENatRec>) {
                        RtRef scrut = eval_value(n.scrutinee, env);
                        const auto* nat = std::get_if<RNat>(&scrut->node);
                        if (!nat) stuck(t, "recursor on a non-number");
                        if (nat->value == 0) {
                            enter(t, n.zero, env);
                            note("RL-Z", t.id);
                        } else {
                            RtRef rec = mk(RRec{nat->value - 1, n.zero, n.pred_var, n.rec_var,
                                                n.succ, env});
                            RtEnvRef env2 =
                                RtEnv::bind(env, n.pred_var, mk(RNat{nat->value - 1}));
                            env2 = RtEnv::bind(env2, n.rec_var, rec);
                            enter(t, n.succ, env2);
                            note("RL-S", t.id);
                        }
                        return true;
                    } else if constexpr (std::is_same_v<T, ENeg>) {
                        t.frames.push_back(FNeg{});
                        enter(t, n.arg, env);
                        return false;
                    } else if constexpr (std::is_same_v<T, EAdd>) {
                        t.frames.push_back(FAddL{n.rhs, env});
                        enter(t, n.lhs, env);
                        return false;
                    } else {
                        stuck(t, "unhandled expression");
                        return false;
                    }
                },
                e->node);
            if (reduced) return true;
            continue;
        }
        // returning a value through the continuation
        if (t.frames.empty()) {
            t.finished = true;
            return false;
        }
        Frame frame = t.frames.back();
        t.frames.pop_back();
        RtRef v = t.value;
        bool reduced = std::visit(
            [&](auto& f) -> bool {
                using F = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<F, FAppFn>) {
                    if (const auto* rec = std::get_if<RRec>(&v->node)) {
                        t.frames.push_back(f);
                        unroll_rec(t, *rec);
                        return true;
                    }
                    t.frames.push_back(FAppArg{v});
                    enter(t, f.arg, f.env);
                    return false;
                } else if constexpr (std::is_same_v<F, FAppArg>) {
                    apply(t, f.fn, v);
                    return !t.blocked.has_value();
                } else if constexpr (std::is_same_v<F, FPairSnd>) {
                    return_value(t, mk(RPair{f.fst, v}));
                    return false;
                } else if constexpr (std::is_same_v<F, FLetPair>) {
                    if (const auto* rec = std::get_if<RRec>(&v->node)) {
                        t.frames.push_back(f);
                        unroll_rec(t, *rec);
                        return true;
                    }
                    const auto* p = std::get_if<RPair>(&v->node);
                    if (!p) stuck(t, "pair elimination of a non-pair");
                    RtEnvRef env2 = RtEnv::bind(f.env, f.fst, p->fst);
                    env2 = RtEnv::bind(env2, f.snd, p->snd);
                    enter(t, f.body, env2);
                    note("Rl-Prod-Elim", t.id);
                    return true;
                } else if constexpr (std::is_same_v<F, FLet>) {
                    enter(t, f.body, RtEnv::bind(f.env, f.binder, v));
                    note("Rl-Let", t.id);
                    return true;
                } else if constexpr (std::is_same_v<F, FSend>) {
                    const auto* c = std::get_if<RChan>(&v->node);
                    if (!c) stuck(t, "send applied to a non-channel");
                    return_value(t, mk(RSendPartial{c->endpoint}));
                    return false;
                } else if constexpr (std::is_same_v<F, FRecv>) {
                    const auto* c = std::get_if<RChan>(&v->node);
                    if (!c) stuck(t, "recv applied to a non-channel");
                    block(t, BlockDir::RecvSide, c->endpoint, nullptr);
                    return false;
                } else if constexpr (std::is_same_v<F, FNeg>) {
                    const auto* iv = std::get_if<RInt>(&v->node);
                    if (!iv) stuck(t, "negation of a non-integer");
                    return_value(t, mk(RInt{-iv->value}));
                    note("Rl-Neg", t.id);
                    return true;
                } else if constexpr (std::is_same_v<F, FAddL>) {
                    t.frames.push_back(FAddR{v});
                    enter(t, f.rhs, f.env);
                    return false;
                } else {
                    const FAddR& fr = f;
                    const auto* lv = std::get_if<RInt>(&fr.lhs->node);
                    const auto* rv = std::get_if<RInt>(&v->node);
                    if (!lv || !rv) stuck(t, "addition of non-integers");
                    return_value(t, mk(RInt{lv->value + rv->value}));
                    note("Rl-Add", t.id);
                    return true;
                }
            },
            frame);
        if (reduced) return true;
    }
}

void Config::unroll_rec(Thread& t, const RRec& rec) {
    if (rec.level == 0) {
        enter(t, rec.zero, rec.captured);
        note("RL-Z", t.id);
    } else {
        RtRef next = mk(RRec{rec.level - 1, rec.zero, rec.pred_var, rec.rec_var, rec.succ,
                             rec.captured});
        RtEnvRef env2 = RtEnv::bind(rec.captured, rec.pred_var, mk(RNat{rec.level - 1}));
        env2 = RtEnv::bind(env2, rec.rec_var, next);
        enter(t, rec.succ, env2);
        note("RL-S", t.id);
    }
}

void Config::apply(Thread& t, const RtRef& fn, const RtRef& arg) {
    if (const auto* clo = std::get_if<RClosure>(&fn->node)) {
        enter(t, clo->body, RtEnv::bind(clo->captured, clo->binder, arg));
        note("Rl-Betav", t.id);
        return;
    }
    if (const auto* sp = std::get_if<RSendPartial>(&fn->node)) {
        block(t, BlockDir::SendSide, sp->endpoint, arg);
        return;
    }
    stuck(t, "application of a non-function");
}

bool Config::try_rendezvous() {
    for (size_t i = 0; i < threads_.size(); ++i) {
        Thread& a = threads_[i];
        if (!a.blocked || *a.blocked != BlockDir::SendSide) continue;
        for (size_t j = 0; j < threads_.size(); ++j) {
            if (i == j) continue;
            Thread& b = threads_[j];
            if (!b.blocked || *b.blocked != BlockDir::RecvSide) continue;
            auto pa = channels_.find(a.blocked_endpoint);
            if (pa == channels_.end() || pa->second.peer != b.blocked_endpoint) continue;
            RtRef payload = a.pending_payload;
            if (opts_.typed_replay) {
                advance_session(a.blocked_endpoint, payload);
                advance_session(b.blocked_endpoint, payload);
            }
            int a_ep = a.blocked_endpoint;
            int b_ep = b.blocked_endpoint;
            a.blocked.reset();
            a.pending_payload = nullptr;
            a.blocked_endpoint = -1;
            return_value(a, mk(RChan{a_ep}));
            b.blocked.reset();
            b.blocked_endpoint = -1;
            return_value(b, mk(RPair{payload, mk(RChan{b_ep})}));
            note("Rl-Com", a.id, b.id);
            return true;
        }
    }
    return false;
}

void Config::gc_threads() {
    threads_.erase(std::remove_if(threads_.begin(), threads_.end(),
                                  [](const Thread& t) {
                                      return t.finished && t.id != 0 && t.value &&
                                             std::holds_alternative<RUnit>(t.value->node);
                                  }),
                   threads_.end());
}

bool Config::step() {
    if (stuck_) return false;
    std::vector<size_t> order(threads_.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    if (opts_.seed) {
        for (size_t i = order.size(); i > 1; --i) {
            rng_state_ ^= rng_state_ << 13;
            rng_state_ ^= rng_state_ >> 7;
            rng_state_ ^= rng_state_ << 17;
            std::swap(order[i - 1], order[rng_state_ % i]);
        }
    }
    try {
        for (size_t i : order) {
            if (step_thread(threads_[i])) {
                ++steps_;
                gc_threads();
                if (opts_.typed_replay && opts_.replay_hook) opts_.replay_hook(*this);
                return true;
            }
        }
        if (try_rendezvous()) {
            ++steps_;
            gc_threads();
            if (opts_.typed_replay && opts_.replay_hook) opts_.replay_hook(*this);
            return true;
        }
    } catch (const EvalStuck& s) {
        if (!stuck_) stuck_ = StuckError{-1, s.reason};
        return false;
    }
    return false;
}

Outcome Config::run() {
    Outcome out;
    while (steps_ < opts_.max_steps) {
        if (!step()) break;
    }
    out.steps = steps_;
    if (stuck_) {
        out.kind = OutcomeKind::Stuck;
        out.detail = stuck_->reason;
        return out;
    }
    if (steps_ >= opts_.max_steps) {
        out.kind = OutcomeKind::OutOfFuel;
        out.detail = "no termination within " + std::to_string(opts_.max_steps) + " steps";
        return out;
    }
    bool all_done = true;
    std::string blocked_report;
    for (const auto& t : threads_) {
        if (t.finished) {
            out.results[t.id] = t.value;
            if (t.id == 0) out.main_result = t.value;
        } else {
            all_done = false;
            blocked_report += "thread " + std::to_string(t.id);
            if (t.blocked) {
                blocked_report += (*t.blocked == BlockDir::SendSide ? " sending on #chan"
                                                                    : " receiving on #chan") +
                                  std::to_string(t.blocked_endpoint);
            } else {
                blocked_report += " not runnable";
            }
            blocked_report += "; ";
        }
    }
    out.kind = all_done ? OutcomeKind::AllFinished : OutcomeKind::Deadlocked;
    out.detail = blocked_report;
    return out;
}

// ---------------------------------------------------------------------------
// Rendering a configuration as a process soup
// ---------------------------------------------------------------------------

ValueRef Config::value_syntax(const RtRef& v) const {
    return std::visit(
        [&](const auto& n) -> ValueRef {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, RUnit>) {
                return v_unit();
            } else if constexpr (std::is_same_v<T, RLabel>) {
                return v_label(n.lab);
            } else if constexpr (std::is_same_v<T, RInt>) {
                return v_int(n.value);
            } else if constexpr (std::is_same_v<T, RNat>) {
                return v_nat(n.value);
            } else if constexpr (std::is_same_v<T, RChan>) {
                auto it = channels_.find(n.endpoint);
                return v_var(it != channels_.end() ? it->second.display : fresh("ch"));
            } else if constexpr (std::is_same_v<T, RClosure>) {
                ExprRef body = close_expr(n.body, n.captured, n.binder);
                return v_lam(n.mult, n.binder, n.annot, body);
            } else if constexpr (std::is_same_v<T, RPair>) {
                return v_pair(fresh("p"), nullptr, value_syntax(n.fst), value_syntax(n.snd));
            } else if constexpr (std::is_same_v<T, RSendPartial>) {
                auto it = channels_.find(n.endpoint);
                return v_send(v_var(it != channels_.end() ? it->second.display : fresh("ch")));
            } else {
                // re-rolled recursor: rebuild the expression and wrap in a
                // lambda-free value via its pending form
                return v_var(fresh("rec"));
            }
        },
        v->node);
}

ExprRef Config::close_expr(const ExprRef& e, const RtEnvRef& env, Name skip) const {
    ExprRef out = e;
    std::set<Name> seen;
    seen.insert(skip);
    for (const RtEnv* cur = env.get(); cur; cur = cur->next.get()) {
        if (!seen.insert(cur->name).second) continue;
        if (!free_vars(out).count(cur->name)) continue;
        out = subst_expr(out, cur->name, value_syntax(cur->value));
    }
    return out;
}

ProcessRef Config::render() const {
    std::vector<ProcessRef> procs;
    for (const auto& t : threads_) {
        ExprRef body;
        if (t.control) {
            body = close_expr(t.control->first, t.control->second, fresh("none"));
        } else if (t.blocked) {
            auto it = channels_.find(t.blocked_endpoint);
            Name ch = it != channels_.end() ? it->second.display : fresh("ch");
            if (*t.blocked == BlockDir::SendSide) {
                body = e_app(e_val(v_send(v_var(ch))), e_val(value_syntax(t.pending_payload)));
            } else {
                body = e_recv(e_var(ch));
            }
        } else {
            body = e_val(value_syntax(t.value));
        }
        // wrap the evaluation context
        for (auto it = t.frames.rbegin(); it != t.frames.rend(); ++it) {
            body = std::visit(
                [&](const auto& f) -> ExprRef {
                    using F = std::decay_t<decltype(f)>;
                    if constexpr (std::is_same_v<F, FAppFn>) {
                        return e_app(body, close_expr(f.arg, f.env, fresh("none")));
                    } else if constexpr (std::is_same_v<F, FAppArg>) {
                        return e_app(e_val(value_syntax(f.fn)), body);
                    } else if constexpr (std::is_same_v<F, FPairSnd>) {
                        return e_pair(fresh("p"), nullptr, value_syntax(f.fst), body);
                    } else if constexpr (std::is_same_v<F, FLetPair>) {
                        ExprRef b = close_expr(f.body, f.env, f.fst);
                        return e_letpair(f.fst, f.snd, body, b);
                    } else if constexpr (std::is_same_v<F, FLet>) {
                        return e_let(f.binder, body, close_expr(f.body, f.env, f.binder));
                    } else if constexpr (std::is_same_v<F, FSend>) {
                        return e_send(body);
                    } else if constexpr (std::is_same_v<F, FRecv>) {
                        return e_recv(body);
                    } else if constexpr (std::is_same_v<F, FNeg>) {
                        return e_neg(body);
                    } else if constexpr (std::is_same_v<F, FAddL>) {
                        return e_add(body, close_expr(f.rhs, f.env, fresh("none")));
                    } else {
                        return e_add(e_val(value_syntax(std::get<FAddR>(Frame{f}).lhs)), body);
                    }
                },
                *it);
        }
        procs.push_back(p_expr(body));
    }
    if (procs.empty()) procs.push_back(p_expr(e_val(v_unit())));
    ProcessRef soup = procs.front();
    for (size_t i = 1; i < procs.size(); ++i) soup = p_par(soup, procs[i]);
    // wrap channels, newest innermost
    std::vector<int> eps;
    for (const auto& [ep, info] : channels_)
        if (ep < info.peer) eps.push_back(ep);
    std::sort(eps.rbegin(), eps.rend());
    for (int ep : eps) {
        const ChannelInfo& ci = channels_.at(ep);
        const ChannelInfo& di = channels_.at(ci.peer);
        soup = p_nu(ci.display, di.display, ci.session, soup);
    }
    return soup;
}

Outcome run_program(const Program& prog, EvalOptions opts) {
    if (!prog.main) {
        Outcome out;
        out.kind = OutcomeKind::Stuck;
        out.detail = "program has no main";
        return out;
    }
    try {
        Config cfg = Config::boot(prog, *prog.main, std::move(opts));
        return cfg.run();
    } catch (const EvalStuck& s) {
        Outcome out;
        out.kind = OutcomeKind::Stuck;
        out.detail = s.reason;
        return out;
    }
}

} // namespace ldst
