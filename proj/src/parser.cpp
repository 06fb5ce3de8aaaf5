#include "ldst/parser.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <tuple>

#include "ldst/pretty.hpp"

namespace ldst {

namespace {

enum class Tok {
    End,
    LId,
    UId,
    Int,
    // punctuation
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Less,
    Greater,
    Comma,
    Dot,
    Colon,
    Equals,
    Bang,
    Query,
    Plus,
    Minus,
    Arrow,
    Lolli,
    Tilde,
    Tick,
    Star,
    Amp,
    OPlus,
    Underscore,
    EndOut,
    EndIn,
    // keywords
    KwType,
    KwLet,
    KwIn,
    KwCase,
    KwOf,
    KwRec,
    KwNatrec,
    KwNew,
    KwFork,
    KwSend,
    KwRecv,
    KwLambda,
    KwLin,
    KwUn,
    KwDualof,
    KwWith,
    KwSelect,
    KwRcase,
    KwClose,
    KwWait,
    KwUnit,
    KwInt,
    KwNat,
    KwEnd,
    KwZ,
    KwS,
};

struct Token {
    Tok kind;
    std::string text;
    long long int_val = 0;
    SourcePos pos;
};

const std::map<std::string, Tok>& keywords() {
    static const std::map<std::string, Tok> kw = {
        {"type", Tok::KwType},     {"let", Tok::KwLet},       {"in", Tok::KwIn},
        {"case", Tok::KwCase},     {"of", Tok::KwOf},         {"rec", Tok::KwRec},
        {"natrec", Tok::KwNatrec}, {"new", Tok::KwNew},       {"fork", Tok::KwFork},
        {"send", Tok::KwSend},     {"recv", Tok::KwRecv},     {"lambda", Tok::KwLambda},
        {"lin", Tok::KwLin},       {"un", Tok::KwUn},         {"dualof", Tok::KwDualof},
        {"with", Tok::KwWith},     {"select", Tok::KwSelect}, {"rcase", Tok::KwRcase},
        {"close", Tok::KwClose},   {"wait", Tok::KwWait},     {"Unit", Tok::KwUnit},
        {"Int", Tok::KwInt},       {"Nat", Tok::KwNat},       {"End", Tok::KwEnd},
        {"Z", Tok::KwZ},           {"S", Tok::KwS},
    };
    return kw;
}

bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\''; }

std::vector<Token> lex(const std::string& src) {
    std::vector<Token> out;
    size_t i = 0;
    int line = 1, col = 1;
    auto pos_here = [&]() { return SourcePos{line, col, static_cast<long>(i)}; };
    auto advance = [&](size_t n) {
        for (size_t k = 0; k < n; ++k) {
            if (src[i + k] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        i += n;
    };
    auto prev_ends_atom = [&]() -> bool {
        if (out.empty()) return false;
        switch (out.back().kind) {
        case Tok::LId:
        case Tok::UId:
        case Tok::Int:
        case Tok::RParen:
        case Tok::RBrace:
        case Tok::RBracket:
        case Tok::Greater:
            return true;
        default:
            return false;
        }
    };

    while (i < src.size()) {
        char c = src[i];
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            advance(1);
            continue;
        }
        if (c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
            while (i < src.size() && src[i] != '\n') advance(1);
            continue;
        }
        SourcePos p = pos_here();
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '-' && i + 1 < src.size() && std::isdigit(static_cast<unsigned char>(src[i + 1])) &&
             !prev_ends_atom())) {
            size_t start = i;
            if (c == '-') advance(1);
            while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) advance(1);
            std::string text = src.substr(start, i - start);
            out.push_back({Tok::Int, text, std::stoll(text), p});
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            size_t start = i;
            while (i < src.size() && ident_char(src[i])) advance(1);
            std::string text = src.substr(start, i - start);
            if (text == "end" && i < src.size() && (src[i] == '!' || src[i] == '?')) {
                Tok k = src[i] == '!' ? Tok::EndOut : Tok::EndIn;
                advance(1);
                out.push_back({k, text, 0, p});
                continue;
            }
            auto it = keywords().find(text);
            if (it != keywords().end()) {
                out.push_back({it->second, text, 0, p});
            } else if (std::isupper(static_cast<unsigned char>(text[0]))) {
                out.push_back({Tok::UId, text, 0, p});
            } else {
                out.push_back({Tok::LId, text, 0, p});
            }
            continue;
        }
        auto push1 = [&](Tok k) {
            out.push_back({k, std::string(1, c), 0, p});
            advance(1);
        };
        switch (c) {
        case '(':
            if (i + 2 < src.size() && src[i + 1] == '+' && src[i + 2] == ')') {
                out.push_back({Tok::OPlus, "(+)", 0, p});
                advance(3);
            } else {
                push1(Tok::LParen);
            }
            break;
        case ')': push1(Tok::RParen); break;
        case '{': push1(Tok::LBrace); break;
        case '}': push1(Tok::RBrace); break;
        case '[': push1(Tok::LBracket); break;
        case ']': push1(Tok::RBracket); break;
        case '<': push1(Tok::Less); break;
        case '>': push1(Tok::Greater); break;
        case ',': push1(Tok::Comma); break;
        case '.': push1(Tok::Dot); break;
        case ':': push1(Tok::Colon); break;
        case '=': push1(Tok::Equals); break;
        case '!': push1(Tok::Bang); break;
        case '?': push1(Tok::Query); break;
        case '+': push1(Tok::Plus); break;
        case '~': push1(Tok::Tilde); break;
        case '\'': push1(Tok::Tick); break;
        case '*': push1(Tok::Star); break;
        case '&': push1(Tok::Amp); break;
        case '_':
            if (i + 1 < src.size() && ident_char(src[i + 1])) {
                size_t start = i;
                while (i < src.size() && ident_char(src[i])) advance(1);
                out.push_back({Tok::LId, src.substr(start, i - start), 0, p});
            } else {
                push1(Tok::Underscore);
            }
            break;
        case '-':
            if (i + 1 < src.size() && src[i + 1] == '>') {
                out.push_back({Tok::Arrow, "->", 0, p});
                advance(2);
            } else if (i + 1 < src.size() && src[i + 1] == 'o' &&
                       (i + 2 >= src.size() || !ident_char(src[i + 2]))) {
                out.push_back({Tok::Lolli, "-o", 0, p});
                advance(2);
            } else {
                push1(Tok::Minus);
            }
            break;
        default:
            throw Error(ErrCode::SyntaxError, std::string("unexpected character '") + c + "'", p);
        }
    }
    out.push_back({Tok::End, "<eof>", 0, pos_here()});
    return out;
}

// ---------------------------------------------------------------------------
// Parser base
// ---------------------------------------------------------------------------

class ParserBase {
public:
    explicit ParserBase(const std::string& src) : toks_(lex(src)) {}

    const Token& peek(size_t k = 0) const {
        size_t i = pos_ + k;
        return i < toks_.size() ? toks_[i] : toks_.back();
    }
    bool at(Tok k, size_t ahead = 0) const { return peek(ahead).kind == k; }
    Token next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }
    bool accept(Tok k) {
        if (at(k)) {
            next();
            return true;
        }
        return false;
    }
    Token expect(Tok k, const std::string& what) {
        if (!at(k))
            throw Error(ErrCode::SyntaxError,
                        "expected " + what + ", found '" + peek().text + "'", peek().pos);
        return next();
    }
    size_t mark() const { return pos_; }
    void reset(size_t m) { pos_ = m; }
    SourcePos here() const { return peek().pos; }

protected:
    std::vector<Token> toks_;
    size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// LDGV parser
// ---------------------------------------------------------------------------

class LdgvParser : public ParserBase {
public:
    LdgvParser(const std::string& src,
               const std::vector<std::pair<Name, TypeRef>>& abbrevs)
        : ParserBase(src) {
        for (const auto& [n, t] : abbrevs) abbrevs_[n] = t;
    }

    Program program() {
        Program prog;
        std::map<Name, TypeRef> decls;
        std::map<Name, bool> seen_def;
        while (!at(Tok::End)) {
            if (accept(Tok::KwType)) {
                SourcePos p = here();
                Name n = intern(expect(Tok::UId, "type name").text);
                if (abbrevs_.count(n))
                    throw Error(ErrCode::DuplicateDefinition, "type " + n.str(), p);
                expect(Tok::Equals, "'='");
                TypeRef t = type();
                abbrevs_[n] = t;
                prog.type_defs.emplace_back(n, t);
                continue;
            }
            SourcePos p = here();
            Name n = intern(expect(Tok::LId, "definition name").text);
            if (accept(Tok::Colon)) {
                if (decls.count(n))
                    throw Error(ErrCode::DuplicateDefinition, "declaration " + n.str(), p);
                decls[n] = type();
                continue;
            }
            // definition with parameters
            std::vector<std::pair<Name, TypeRef>> params;
            while (!at(Tok::Equals)) {
                if (at(Tok::LId)) {
                    params.emplace_back(intern(next().text), nullptr);
                } else if (at(Tok::LParen)) {
                    next();
                    Name pn = intern(expect(Tok::LId, "parameter name").text);
                    expect(Tok::Colon, "':'");
                    TypeRef pt = type();
                    expect(Tok::RParen, "')'");
                    params.emplace_back(pn, pt);
                } else {
                    throw Error(ErrCode::SyntaxError,
                                "expected parameter or '=', found '" + peek().text + "'",
                                here());
                }
            }
            expect(Tok::Equals, "'='");
            ExprRef body = expr();
            if (seen_def[n])
                throw Error(ErrCode::DuplicateDefinition, "definition " + n.str(), p);
            seen_def[n] = true;

            TypeRef declared = decls.count(n) ? decls[n] : nullptr;
            body = desugar_params(n, params, declared, body, p);
            prog.term_defs.push_back(TermDef{n, declared, body, p});
            if (n == intern("main")) prog.main = body;
        }
        for (const auto& [n, t] : decls) {
            if (!seen_def.count(n))
                throw Error(ErrCode::SyntaxError, "declaration without definition: " + n.str());
        }
        return prog;
    }

    TypeRef type() { return type_arrow(); }

    ExprRef expr() {
        if (at(Tok::KwLet)) return let_expr();
        if (at(Tok::KwLambda)) return lambda();
        return expr_add();
    }

    ValueRef value() { return value_atom(); }

private:
    std::map<Name, TypeRef> abbrevs_;

    ExprRef desugar_params(Name def, const std::vector<std::pair<Name, TypeRef>>& params,
                           const TypeRef& declared, ExprRef body, SourcePos p) {
        // Peel the declared Pi chain to annotate bare parameters.
        std::vector<std::tuple<Name, TypeRef, Mult>> lams;
        TypeRef cur = declared;
        for (const auto& [pn, pannot] : params) {
            Mult m = Mult::Un;
            TypeRef annot = pannot;
            if (cur) {
                const auto* pi = std::get_if<TPi>(&cur->node);
                if (!pi)
                    throw Error(ErrCode::SyntaxError,
                                "declared type of " + def.str() +
                                    " has fewer arrows than parameters",
                                p);
                m = pi->mult;
                if (!annot) annot = pi->dom;
                cur = occurs_free(pi->cod, pi->binder)
                          ? subst_type(pi->cod, pi->binder, v_var(pn))
                          : pi->cod;
            }
            if (!annot)
                throw Error(ErrCode::SyntaxError,
                            "parameter " + pn.str() + " of " + def.str() +
                                " needs a type annotation or a declaration",
                            p);
            lams.emplace_back(pn, annot, m);
        }
        for (auto it = lams.rbegin(); it != lams.rend(); ++it) {
            body = e_val(v_lam(std::get<2>(*it), std::get<0>(*it), std::get<1>(*it), body));
        }
        return body;
    }

    // --- types ---

    TypeRef type_arrow() {
        SourcePos p = here();
        // dependent function type: ( x : A ) -> B
        if (at(Tok::LParen) && at(Tok::LId, 1) && at(Tok::Colon, 2)) {
            size_t m = mark();
            next();
            Name binder = intern(next().text);
            next(); // ':'
            TypeRef dom = type();
            expect(Tok::RParen, "')'");
            if (at(Tok::Arrow) || at(Tok::Lolli)) {
                Mult mm = next().kind == Tok::Arrow ? Mult::Un : Mult::Lin;
                TypeRef cod = type_arrow();
                return t_pi(mm, binder, dom, cod);
            }
            reset(m); // was a parenthesized type after all
        }
        TypeRef lhs = type_prefix();
        if (at(Tok::Arrow) || at(Tok::Lolli)) {
            Mult mm = next().kind == Tok::Arrow ? Mult::Un : Mult::Lin;
            TypeRef cod = type_arrow();
            return t_pi(mm, fresh("x"), lhs, cod);
        }
        (void)p;
        return lhs;
    }

    TypeRef type_prefix() {
        if (at(Tok::Bang) || at(Tok::Query)) {
            bool send = next().kind == Tok::Bang;
            Name binder;
            TypeRef payload;
            if (at(Tok::LParen) && at(Tok::LId, 1) && at(Tok::Colon, 2)) {
                next();
                binder = intern(next().text);
                next();
                payload = type();
                expect(Tok::RParen, "')'");
                accept(Tok::Dot);
            } else {
                binder = fresh("x");
                payload = type_atom();
                expect(Tok::Dot, "'.' after send/receive payload");
            }
            TypeRef cont = type_prefix();
            return send ? t_send(binder, payload, cont) : t_recv(binder, payload, cont);
        }
        if (at(Tok::KwRec) || at(Tok::KwNatrec)) {
            next();
            ValueRef scrut = nat_scrutinee();
            TypeRef zero = type_atom();
            expect(Tok::LBracket, "'['");
            Name alpha = intern(expect(Tok::LId, "recursion variable").text);
            expect(Tok::RBracket, "']'");
            TypeRef succ = type_prefix();
            return t_natrec(scrut, zero, alpha, Kind::lin_session(), succ);
        }
        return type_atom();
    }

    TypeRef type_atom() {
        SourcePos p = here();
        if (accept(Tok::KwUnit)) return t_unit();
        if (accept(Tok::KwInt)) return t_int();
        if (accept(Tok::KwNat)) return t_nat();
        if (accept(Tok::KwEnd)) return t_end();
        if (accept(Tok::Tilde)) {
            Name n = intern(expect(Tok::LId, "type variable").text);
            return t_var(n, Polarity::Neg);
        }
        if (at(Tok::LBrace)) return label_set_type();
        if (accept(Tok::KwCase)) {
            ValueRef scrut = value_atom();
            expect(Tok::KwOf, "'of'");
            expect(Tok::LBrace, "'{'");
            std::vector<std::pair<Label, TypeRef>> branches;
            do {
                Label l = branch_label();
                expect(Tok::Colon, "':'");
                branches.emplace_back(l, type());
            } while (accept(Tok::Comma));
            expect(Tok::RBrace, "'}'");
            return t_case(scrut, std::move(branches));
        }
        if (accept(Tok::KwDualof)) {
            TypeRef t = type_atom();
            return dual(t);
        }
        if (at(Tok::LBracket)) {
            next();
            Name binder;
            TypeRef fst;
            if (at(Tok::LId) && at(Tok::Colon, 1)) {
                binder = intern(next().text);
                next();
                fst = type();
            } else {
                binder = fresh("x");
                fst = type();
            }
            expect(Tok::Comma, "','");
            TypeRef snd = type();
            expect(Tok::RBracket, "']'");
            return t_sigma(binder, fst, snd);
        }
        if (at(Tok::UId)) {
            Token t = next();
            Name n = intern(t.text);
            auto it = abbrevs_.find(n);
            if (it == abbrevs_.end())
                throw Error(ErrCode::UnknownTypeName, "unknown type name " + t.text, t.pos);
            return it->second;
        }
        if (at(Tok::LId)) {
            return t_var(intern(next().text), Polarity::Pos);
        }
        if (at(Tok::LParen)) {
            // Either an equality type `(V = W : A)` or a parenthesized type.
            size_t m = mark();
            next();
            try {
                ValueRef lhs = value_atom();
                if (accept(Tok::Equals)) {
                    ValueRef rhs = value_atom();
                    expect(Tok::Colon, "':'");
                    TypeRef idx = type();
                    expect(Tok::RParen, "')'");
                    return t_eq(idx, lhs, rhs);
                }
            } catch (const Error&) {
                // fall through to type
            }
            reset(m);
            next();
            TypeRef t = type();
            expect(Tok::RParen, "')'");
            return t;
        }
        throw Error(ErrCode::SyntaxError, "expected a type, found '" + peek().text + "'", p);
    }

    TypeRef label_set_type() {
        expect(Tok::LBrace, "'{'");
        std::vector<Label> ls;
        do {
            ls.push_back(branch_label());
        } while (accept(Tok::Comma));
        expect(Tok::RBrace, "'}'");
        return t_label(LabelSet(std::move(ls)));
    }

    Label branch_label() {
        Token t = expect(Tok::UId, "label");
        return label(t.text);
    }

    // natrec scrutinees admit numeral literals, desugared to Z/S form.
    ValueRef nat_scrutinee() {
        if (at(Tok::Int)) {
            Token t = next();
            if (t.int_val < 0)
                throw Error(ErrCode::SyntaxError, "negative natural", t.pos);
            return v_nat(static_cast<unsigned>(t.int_val));
        }
        return value_atom();
    }

    // --- values ---

    ValueRef value_atom() {
        SourcePos p = here();
        if (at(Tok::LId)) return v_var(intern(next().text));
        if (accept(Tok::Tick)) return v_label(label(expect(Tok::UId, "label").text));
        if (at(Tok::UId)) return v_label(label(next().text));
        if (at(Tok::Int)) return v_int(next().int_val);
        if (accept(Tok::KwZ)) return v_zero();
        if (accept(Tok::KwS)) {
            expect(Tok::LParen, "'('");
            ValueRef v = value_atom();
            expect(Tok::RParen, "')'");
            return v_succ(v);
        }
        if (at(Tok::LParen) && at(Tok::RParen, 1)) {
            next();
            next();
            return v_unit();
        }
        if (at(Tok::Less)) {
            next();
            Name binder = intern(expect(Tok::LId, "pair binder").text);
            TypeRef annot;
            if (accept(Tok::Colon)) annot = type();
            expect(Tok::Equals, "'='");
            ValueRef fst = value_atom();
            expect(Tok::Comma, "','");
            ValueRef snd = value_atom();
            expect(Tok::Greater, "'>'");
            return v_pair(binder, annot, fst, snd);
        }
        if (at(Tok::LParen)) {
            next();
            ValueRef v = value_atom();
            expect(Tok::RParen, "')'");
            return v;
        }
        throw Error(ErrCode::SyntaxError, "expected a value, found '" + peek().text + "'", p);
    }

    // --- expressions ---

    ExprRef let_expr() {
        expect(Tok::KwLet, "'let'");
        struct Bind {
            bool is_pair;
            Name a, b;
            ExprRef rhs;
        };
        std::vector<Bind> binds;
        while (!at(Tok::KwIn)) {
            Bind bind;
            if (at(Tok::LParen)) {
                next();
                bind.is_pair = true;
                bind.a = binder_name();
                expect(Tok::Comma, "','");
                bind.b = binder_name();
                expect(Tok::RParen, "')'");
            } else {
                bind.is_pair = false;
                bind.a = binder_name();
            }
            expect(Tok::Equals, "'='");
            bind.rhs = expr();
            binds.push_back(std::move(bind));
        }
        expect(Tok::KwIn, "'in'");
        ExprRef body = expr();
        for (auto it = binds.rbegin(); it != binds.rend(); ++it) {
            body = it->is_pair ? e_letpair(it->a, it->b, it->rhs, body)
                               : e_let(it->a, it->rhs, body);
        }
        return body;
    }

    Name binder_name() {
        if (accept(Tok::Underscore)) return fresh("wild");
        return intern(expect(Tok::LId, "binder").text);
    }

    ExprRef lambda() {
        expect(Tok::KwLambda, "'lambda'");
        Mult m = Mult::Un;
        if (accept(Tok::KwLin)) m = Mult::Lin;
        else accept(Tok::KwUn);
        expect(Tok::LParen, "'('");
        Name binder = intern(expect(Tok::LId, "binder").text);
        expect(Tok::Colon, "':'");
        TypeRef annot = type();
        expect(Tok::RParen, "')'");
        accept(Tok::Dot);
        ExprRef body = expr();
        return e_val(v_lam(m, binder, annot, body));
    }

    ExprRef expr_add() {
        ExprRef lhs = expr_app();
        while (at(Tok::Plus)) {
            next();
            ExprRef rhs = expr_app();
            lhs = e_add(lhs, rhs);
        }
        return lhs;
    }

    // Stop application when the next tokens begin a new let binding.
    bool arg_starts_binding() const {
        if (at(Tok::LId) && at(Tok::Equals, 1)) return true;
        if (at(Tok::Underscore) && at(Tok::Equals, 1)) return true;
        if (at(Tok::LParen)) {
            size_t j = 1;
            if (!(at(Tok::LId, j) || at(Tok::Underscore, j))) return false;
            ++j;
            if (!at(Tok::Comma, j)) return false;
            ++j;
            if (!(at(Tok::LId, j) || at(Tok::Underscore, j))) return false;
            ++j;
            return at(Tok::RParen, j) && at(Tok::Equals, j + 1);
        }
        return false;
    }

    bool starts_atom() const {
        switch (peek().kind) {
        case Tok::LId:
        case Tok::UId:
        case Tok::Tick:
        case Tok::Int:
        case Tok::KwZ:
        case Tok::KwS:
        case Tok::LParen:
        case Tok::Less:
        case Tok::KwCase:
        case Tok::KwNatrec:
        case Tok::KwRec:
            return true;
        default:
            return false;
        }
    }

    ExprRef expr_app() {
        ExprRef head = expr_prefix();
        while (starts_atom() && !arg_starts_binding()) {
            head = e_app(head, expr_atom());
        }
        return head;
    }

    ExprRef expr_prefix() {
        if (accept(Tok::KwSend)) return e_send(expr_atom());
        if (accept(Tok::KwRecv)) return e_recv(expr_atom());
        if (accept(Tok::KwFork)) return e_fork(expr_atom());
        if (accept(Tok::KwNew)) return e_new(type_atom());
        if (accept(Tok::Minus)) return e_neg(expr_atom());
        return expr_atom();
    }

    ExprRef expr_atom() {
        SourcePos p = here();
        if (at(Tok::KwCase)) return case_expr();
        if (at(Tok::KwNatrec) || at(Tok::KwRec)) return natrec_expr();
        if (at(Tok::LParen) && at(Tok::RParen, 1)) {
            next();
            next();
            return e_val(v_unit());
        }
        if (at(Tok::LParen)) {
            next();
            ExprRef e = expr();
            expect(Tok::RParen, "')'");
            return e;
        }
        if (at(Tok::Less)) {
            next();
            Name binder = intern(expect(Tok::LId, "pair binder").text);
            TypeRef annot;
            if (accept(Tok::Colon)) annot = type();
            expect(Tok::Equals, "'='");
            ValueRef fst = value_atom();
            expect(Tok::Comma, "','");
            ExprRef snd = expr();
            expect(Tok::Greater, "'>'");
            return e_pair(binder, annot, fst, snd);
        }
        if (at(Tok::LId) || at(Tok::UId) || at(Tok::Tick) || at(Tok::Int) || at(Tok::KwZ) ||
            at(Tok::KwS)) {
            return e_val(value_atom());
        }
        throw Error(ErrCode::SyntaxError, "expected an expression, found '" + peek().text + "'",
                    p);
    }

    ExprRef case_expr() {
        expect(Tok::KwCase, "'case'");
        ValueRef scrut = value_atom();
        expect(Tok::KwOf, "'of'");
        expect(Tok::LBrace, "'{'");
        std::vector<std::pair<Label, ExprRef>> branches;
        do {
            Label l = branch_label();
            expect(Tok::Colon, "':'");
            branches.emplace_back(l, expr());
        } while (accept(Tok::Comma));
        expect(Tok::RBrace, "'}'");
        return e_case(scrut, std::move(branches));
    }

    ExprRef natrec_expr() {
        next(); // natrec | rec
        ValueRef scrut = nat_scrutinee();
        TypeRef motive;
        if (accept(Tok::Colon)) motive = type();
        expect(Tok::LBrace, "'{'");
        expect(Tok::KwZ, "'Z'");
        expect(Tok::Colon, "':'");
        ExprRef zero = expr();
        expect(Tok::Comma, "','");
        expect(Tok::KwS, "'S'");
        expect(Tok::LParen, "'('");
        Name pred = accept(Tok::Underscore) ? fresh("pred") : intern(expect(Tok::LId, "binder").text);
        expect(Tok::RParen, "')'");
        expect(Tok::KwWith, "'with'");
        expect(Tok::LBracket, "'['");
        Name alpha = intern(expect(Tok::LId, "type variable").text);
        expect(Tok::RBracket, "']'");
        expect(Tok::LParen, "'('");
        Name recv = intern(expect(Tok::LId, "binder").text);
        expect(Tok::Colon, "':'");
        TypeRef annot = type();
        expect(Tok::RParen, "')'");
        expect(Tok::Colon, "':'");
        ExprRef succ = expr();
        expect(Tok::RBrace, "'}'");
        return e_natrec(scrut, motive, zero, pred, alpha, recv, annot, succ);
    }
};

// ---------------------------------------------------------------------------
// LSST parser
// ---------------------------------------------------------------------------

class LsstParser : public ParserBase {
public:
    explicit LsstParser(const std::string& src) : ParserBase(src) {}

    LsstProgram program() {
        LsstProgram prog;
        std::map<Name, lsst::LTypeRef> decls;
        std::map<Name, bool> seen;
        while (!at(Tok::End)) {
            if (accept(Tok::KwType)) {
                SourcePos p = here();
                Name n = intern(expect(Tok::UId, "type name").text);
                if (abbrevs_.count(n))
                    throw Error(ErrCode::DuplicateDefinition, "type " + n.str(), p);
                expect(Tok::Equals, "'='");
                lsst::LTypeRef t = type();
                abbrevs_[n] = t;
                prog.type_defs.emplace_back(n, t);
                continue;
            }
            SourcePos p = here();
            Name n = intern(expect(Tok::LId, "definition name").text);
            if (accept(Tok::Colon)) {
                decls[n] = type();
                continue;
            }
            std::vector<Name> params;
            while (at(Tok::LId)) params.push_back(intern(next().text));
            expect(Tok::Equals, "'='");
            lsst::LExprRef body = expr();
            if (seen[n]) throw Error(ErrCode::DuplicateDefinition, n.str(), p);
            seen[n] = true;
            lsst::LTypeRef declared = decls.count(n) ? decls[n] : nullptr;
            body = desugar_params(n, params, declared, body, p);
            prog.term_defs.push_back(LsstTermDef{n, declared, body, p});
            if (n == intern("main")) prog.main = body;
        }
        return prog;
    }

    lsst::LTypeRef type() {
        lsst::LTypeRef lhs = type_prod();
        if (at(Tok::Arrow) || at(Tok::Lolli)) {
            Mult m = next().kind == Tok::Arrow ? Mult::Un : Mult::Lin;
            return lsst::lt_fun(m, lhs, type());
        }
        return lhs;
    }

    lsst::LExprRef expr() {
        if (at(Tok::KwLet)) return let_expr();
        if (at(Tok::KwLambda)) return lambda();
        return expr_add();
    }

private:
    std::map<Name, lsst::LTypeRef> abbrevs_;

    lsst::LExprRef desugar_params(Name def, const std::vector<Name>& params,
                                  const lsst::LTypeRef& declared, lsst::LExprRef body,
                                  SourcePos p) {
        std::vector<std::tuple<Name, lsst::LTypeRef, Mult>> lams;
        lsst::LTypeRef cur = declared;
        for (Name pn : params) {
            Mult m = Mult::Un;
            lsst::LTypeRef annot;
            if (cur) {
                const auto* f = std::get_if<lsst::LFun>(&cur->node);
                if (!f)
                    throw Error(ErrCode::SyntaxError,
                                "declared type of " + def.str() +
                                    " has fewer arrows than parameters",
                                p);
                m = f->mult;
                annot = f->dom;
                cur = f->cod;
            }
            lams.emplace_back(pn, annot, m);
        }
        for (auto it = lams.rbegin(); it != lams.rend(); ++it) {
            body = lsst::lx({lsst::XLam{std::get<2>(*it), std::get<0>(*it), std::get<1>(*it), body},
                             p});
        }
        return body;
    }

    lsst::LTypeRef type_prod() {
        lsst::LTypeRef lhs = type_prefix();
        if (accept(Tok::Star)) return lsst::lt_prod(lhs, type_prod());
        return lhs;
    }

    lsst::LTypeRef type_prefix() {
        if (accept(Tok::Bang)) {
            lsst::LTypeRef payload = type_atom();
            expect(Tok::Dot, "'.'");
            return lsst::lt_send(payload, type_prefix());
        }
        if (accept(Tok::Query)) {
            lsst::LTypeRef payload = type_atom();
            expect(Tok::Dot, "'.'");
            return lsst::lt_recv(payload, type_prefix());
        }
        if (at(Tok::OPlus) || at(Tok::Amp)) {
            bool sel = next().kind == Tok::OPlus;
            expect(Tok::LBrace, "'{'");
            std::vector<std::pair<Label, lsst::LTypeRef>> branches;
            do {
                Label l = label(expect(Tok::UId, "label").text);
                expect(Tok::Colon, "':'");
                branches.emplace_back(l, type());
            } while (accept(Tok::Comma));
            expect(Tok::RBrace, "'}'");
            return sel ? lsst::lt_select(std::move(branches))
                       : lsst::lt_branch(std::move(branches));
        }
        return type_atom();
    }

    lsst::LTypeRef type_atom() {
        SourcePos p = here();
        if (accept(Tok::KwUnit)) return lsst::lt_unit();
        if (accept(Tok::KwInt)) return lsst::lt_int();
        if (accept(Tok::EndOut)) return lsst::lt_end_out();
        if (accept(Tok::EndIn)) return lsst::lt_end_in();
        if (accept(Tok::KwDualof)) return lsst::lsst_dual(type_atom());
        if (at(Tok::UId)) {
            Token t = next();
            auto it = abbrevs_.find(intern(t.text));
            if (it == abbrevs_.end())
                throw Error(ErrCode::UnknownTypeName, "unknown type name " + t.text, t.pos);
            return it->second;
        }
        if (at(Tok::LParen)) {
            next();
            lsst::LTypeRef t = type();
            expect(Tok::RParen, "')'");
            return t;
        }
        throw Error(ErrCode::SyntaxError, "expected a type, found '" + peek().text + "'", p);
    }

    lsst::LExprRef let_expr() {
        SourcePos p = here();
        expect(Tok::KwLet, "'let'");
        struct Bind {
            bool is_pair;
            Name a, b;
            lsst::LExprRef rhs;
        };
        std::vector<Bind> binds;
        while (!at(Tok::KwIn)) {
            Bind bind;
            if (at(Tok::LParen)) {
                next();
                bind.is_pair = true;
                bind.a = binder_name();
                expect(Tok::Comma, "','");
                bind.b = binder_name();
                expect(Tok::RParen, "')'");
            } else {
                bind.is_pair = false;
                bind.a = binder_name();
            }
            expect(Tok::Equals, "'='");
            bind.rhs = expr();
            binds.push_back(std::move(bind));
        }
        expect(Tok::KwIn, "'in'");
        lsst::LExprRef body = expr();
        for (auto it = binds.rbegin(); it != binds.rend(); ++it) {
            if (it->is_pair)
                body = lsst::lx({lsst::XLetPair{it->a, it->b, it->rhs, body}, p});
            else
                body = lsst::lx({lsst::XLet{it->a, it->rhs, body}, p});
        }
        return body;
    }

    Name binder_name() {
        if (accept(Tok::Underscore)) return fresh("wild");
        return intern(expect(Tok::LId, "binder").text);
    }

    lsst::LExprRef lambda() {
        SourcePos p = here();
        expect(Tok::KwLambda, "'lambda'");
        Mult m = Mult::Un;
        if (accept(Tok::KwLin)) m = Mult::Lin;
        else accept(Tok::KwUn);
        expect(Tok::LParen, "'('");
        Name binder = intern(expect(Tok::LId, "binder").text);
        lsst::LTypeRef annot;
        if (accept(Tok::Colon)) annot = type();
        expect(Tok::RParen, "')'");
        accept(Tok::Dot);
        return lsst::lx({lsst::XLam{m, binder, annot, expr()}, p});
    }

    lsst::LExprRef expr_add() {
        lsst::LExprRef lhs = expr_app();
        while (at(Tok::Plus)) {
            SourcePos p = here();
            next();
            lhs = lsst::lx({lsst::XAdd{lhs, expr_app()}, p});
        }
        return lhs;
    }

    bool arg_starts_binding() const {
        if ((at(Tok::LId) || at(Tok::Underscore)) && at(Tok::Equals, 1)) return true;
        if (at(Tok::LParen)) {
            size_t j = 1;
            if (!(at(Tok::LId, j) || at(Tok::Underscore, j))) return false;
            ++j;
            if (!at(Tok::Comma, j)) return false;
            ++j;
            if (!(at(Tok::LId, j) || at(Tok::Underscore, j))) return false;
            ++j;
            return at(Tok::RParen, j) && at(Tok::Equals, j + 1);
        }
        return false;
    }

    bool starts_atom() const {
        switch (peek().kind) {
        case Tok::LId:
        case Tok::Int:
        case Tok::LParen:
            return true;
        default:
            return false;
        }
    }

    lsst::LExprRef expr_app() {
        lsst::LExprRef head = expr_prefix();
        while (starts_atom() && !arg_starts_binding()) {
            SourcePos p = here();
            head = lsst::lx({lsst::XApp{head, expr_atom()}, p});
        }
        return head;
    }

    lsst::LExprRef expr_prefix() {
        SourcePos p = here();
        if (accept(Tok::KwSend)) return lsst::lx({lsst::XSend{expr_atom()}, p});
        if (accept(Tok::KwRecv)) return lsst::lx({lsst::XRecv{expr_atom()}, p});
        if (accept(Tok::KwFork)) return lsst::lx({lsst::XFork{expr_atom()}, p});
        if (accept(Tok::KwClose)) return lsst::lx({lsst::XClose{expr_atom()}, p});
        if (accept(Tok::KwWait)) return lsst::lx({lsst::XWait{expr_atom()}, p});
        if (accept(Tok::KwNew)) return lsst::lx({lsst::XNew{type_atom()}, p});
        if (accept(Tok::Minus)) return lsst::lx({lsst::XNeg{expr_atom()}, p});
        if (accept(Tok::KwSelect)) {
            Label l = label(expect(Tok::UId, "label").text);
            lsst::LExprRef chan;
            if (starts_atom()) chan = expr_atom();
            return lsst::lx({lsst::XSelect{l, chan, nullptr}, p});
        }
        if (at(Tok::KwRcase)) return rcase();
        return expr_atom();
    }

    lsst::LExprRef rcase() {
        SourcePos p = here();
        expect(Tok::KwRcase, "'rcase'");
        lsst::LExprRef chan = expr_atom();
        expect(Tok::KwOf, "'of'");
        expect(Tok::LBrace, "'{'");
        std::vector<std::tuple<Label, Name, lsst::LExprRef>> branches;
        do {
            Label l = label(expect(Tok::UId, "label").text);
            expect(Tok::Colon, "':'");
            Name binder = intern(expect(Tok::LId, "branch binder").text);
            expect(Tok::Dot, "'.'");
            branches.emplace_back(l, binder, expr());
        } while (accept(Tok::Comma));
        expect(Tok::RBrace, "'}'");
        std::sort(branches.begin(), branches.end(), [](const auto& a, const auto& b) {
            return std::get<0>(a).str() < std::get<0>(b).str();
        });
        return lsst::lx({lsst::XRcase{chan, std::move(branches)}, p});
    }

    lsst::LExprRef expr_atom() {
        SourcePos p = here();
        if (at(Tok::LParen) && at(Tok::RParen, 1)) {
            next();
            next();
            return lsst::lx({lsst::XUnit{}, p});
        }
        if (at(Tok::LParen)) {
            next();
            lsst::LExprRef e = expr();
            if (accept(Tok::Comma)) {
                lsst::LExprRef snd = expr();
                expect(Tok::RParen, "')'");
                return lsst::lx({lsst::XPair{e, snd, nullptr}, p});
            }
            expect(Tok::RParen, "')'");
            return e;
        }
        if (at(Tok::LId)) return lsst::lx({lsst::XVar{intern(next().text)}, p});
        if (at(Tok::Int)) return lsst::lx({lsst::XInt{next().int_val}, p});
        throw Error(ErrCode::SyntaxError, "expected an expression, found '" + peek().text + "'",
                    p);
    }
};

} // namespace

Program parse_ldgv(const std::string& text) {
    LdgvParser p(text, {});
    return p.program();
}

LsstProgram parse_lsst(const std::string& text) {
    LsstParser p(text);
    return p.program();
}

TypeRef parse_type(const std::string& text,
                   const std::vector<std::pair<Name, TypeRef>>& abbrevs) {
    LdgvParser p(text, abbrevs);
    TypeRef t = p.type();
    return t;
}

ExprRef parse_expr(const std::string& text,
                   const std::vector<std::pair<Name, TypeRef>>& abbrevs) {
    LdgvParser p(text, abbrevs);
    return p.expr();
}

std::string print_program(const Program& p) {
    std::string out;
    for (const auto& [n, t] : p.type_defs)
        out += "type " + n.str() + " = " + print_type(t) + "\n";
    for (const auto& d : p.term_defs) {
        if (d.declared) out += d.name.str() + " : " + print_type(d.declared) + "\n";
        out += d.name.str() + " = " + print_expr(d.body) + "\n";
    }
    return out;
}

} // namespace ldst
