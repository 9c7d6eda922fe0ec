#include "hps/syntax.hpp"

#include <array>
#include <charconv>
#include <set>
#include <utility>

namespace hps {

namespace {

enum class Tok : std::uint8_t { Ident, Int, Sym, End };

struct Token {
    Tok kind = Tok::End;
    std::string text;
    std::uint64_t magnitude = 0;
    SourceSpan span;
};

bool is_ident_start(unsigned char c)
{
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
}

bool is_ident_char(unsigned char c)
{
    return is_ident_start(c) || (c >= '0' && c <= '9') || c == '\'';
}

struct Alias {
    std::string_view utf8;
    std::string_view canonical;
    Tok kind;
};

constexpr std::array<Alias, 10> kUnicodeAliases{{
    {"∀", "forall", Tok::Ident},
    {"∃", "exists", Tok::Ident},
    {"∧", "/\\", Tok::Sym},
    {"∨", "\\/", Tok::Sym},
    {"¬", "~", Tok::Sym},
    {"→", "->", Tok::Sym},
    {"≤", "<=", Tok::Sym},
    {"≥", ">=", Tok::Sym},
    {"≠", "!=", Tok::Sym},
    {"∈", "in", Tok::Ident},
}};

constexpr std::array<std::string_view, 23> kSymbols{
    ":=", "::", "++", "->", "/\\", "\\/", "<=", ">=", "!=",
    "(", ")", "[", "]", ",", ":", "=", "<", ">", "+", "-", "*", "%", "~"};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    std::vector<Token> run()
    {
        std::vector<Token> out;
        for (;;) {
            skip_space();
            if (pos_ >= src_.size()) {
                out.push_back(Token{Tok::End, "", 0, {line_, col_, 0}});
                return out;
            }
            out.push_back(next());
        }
    }

private:
    std::string_view src_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;

    void advance_bytes(std::size_t n)
    {
        const std::size_t end = pos_ + n;
        while (pos_ < end) {
            const auto c = static_cast<unsigned char>(src_[pos_]);
            if (c == '\n') {
                ++line_;
                col_ = 1;
            } else if ((c & 0xC0) != 0x80) {
                ++col_;
            }
            ++pos_;
        }
    }

    void skip_space()
    {
        while (pos_ < src_.size()) {
            const char c = src_[pos_];
            if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                advance_bytes(1);
            } else if (c == '#') {
                while (pos_ < src_.size() && src_[pos_] != '\n')
                    advance_bytes(1);
            } else {
                break;
            }
        }
    }

    Token next()
    {
        const SourceSpan start{line_, col_, 0};
        const auto c = static_cast<unsigned char>(src_[pos_]);
        const auto rest = src_.substr(pos_);

        if (is_ident_start(c)) {
            std::size_t n = 1;
            while (n < rest.size() && is_ident_char(static_cast<unsigned char>(rest[n])))
                ++n;
            Token t{Tok::Ident, std::string(rest.substr(0, n)), 0, start};
            t.span.length = static_cast<int>(n);
            advance_bytes(n);
            return t;
        }
        if (c >= '0' && c <= '9') {
            std::size_t n = 1;
            while (n < rest.size() && rest[n] >= '0' && rest[n] <= '9')
                ++n;
            Token t{Tok::Int, std::string(rest.substr(0, n)), 0, start};
            t.span.length = static_cast<int>(n);
            auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + n, t.magnitude);
            if (ec != std::errc{} || t.magnitude > (std::uint64_t{1} << 63))
                throw ParseError("integer literal out of range", t.span);
            advance_bytes(n);
            return t;
        }
        for (const auto& a : kUnicodeAliases) {
            if (rest.starts_with(a.utf8)) {
                Token t{a.kind, std::string(a.canonical), 0, start};
                t.span.length = 1;
                advance_bytes(a.utf8.size());
                return t;
            }
        }
        for (auto sym : kSymbols) {
            if (rest.starts_with(sym)) {
                Token t{Tok::Sym, std::string(sym), 0, start};
                t.span.length = static_cast<int>(sym.size());
                advance_bytes(sym.size());
                return t;
            }
        }
        throw ParseError("unexpected character", SourceSpan{line_, col_, 1});
    }
};

const std::set<std::string, std::less<>> kReserved{
    "goal", "forall", "exists", "in", "true", "false", "if", "then", "else",
    "length", "count", "Int", "IntList"};

// Untyped parse tree; elaborated into Term/Formula with sort checking.
struct Expr {
    std::string op;
    std::uint64_t magnitude = 0;
    bool negative = false;
    std::string name;
    Sort sort = Sort::Int;
    std::vector<Expr> kids;
    SourceSpan span;
};

struct OpInfo {
    int prec;
    bool right_assoc;
    bool comparison;
};

const OpInfo* binary_op(const Token& t)
{
    static const std::array<std::pair<std::string_view, OpInfo>, 15> table{{
        {"->", {1, true, false}},
        {"\\/", {2, true, false}},
        {"/\\", {3, true, false}},
        {"=", {5, false, true}},
        {"!=", {5, false, true}},
        {"<", {5, false, true}},
        {"<=", {5, false, true}},
        {">", {5, false, true}},
        {">=", {5, false, true}},
        {"in", {5, false, true}},
        {"++", {6, false, false}},
        {"::", {7, true, false}},
        {"+", {8, false, false}},
        {"-", {8, false, false}},
        {"*", {9, false, false}},
    }};
    static const OpInfo mod_info{9, false, false};
    if (t.kind == Tok::Sym && t.text == "%")
        return &mod_info;
    if (t.kind != Tok::Sym && !(t.kind == Tok::Ident && t.text == "in"))
        return nullptr;
    for (const auto& [text, info] : table)
        if (text == t.text)
            return &info;
    return nullptr;
}

class Parser {
public:
    explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

    bool at_end() const { return peek().kind == Tok::End; }

    const Token& peek() const { return toks_[pos_]; }

    bool is_sym(std::string_view s) const { return peek().kind == Tok::Sym && peek().text == s; }
    bool is_kw(std::string_view s) const { return peek().kind == Tok::Ident && peek().text == s; }

    Token take() { return toks_[pos_++]; }

    Token expect_sym(std::string_view s)
    {
        if (!is_sym(s))
            throw ParseError("expected '" + std::string(s) + "'", peek().span);
        return take();
    }

    Token expect_kw(std::string_view s)
    {
        if (!is_kw(s))
            throw ParseError("expected '" + std::string(s) + "'", peek().span);
        return take();
    }

    Token expect_name()
    {
        if (peek().kind != Tok::Ident || kReserved.contains(peek().text))
            throw ParseError("expected an identifier", peek().span);
        return take();
    }

    Sort expect_sort()
    {
        const Token& t = peek();
        if (t.kind == Tok::Ident && t.text == "Int") {
            take();
            return Sort::Int;
        }
        if (t.kind == Tok::Ident && t.text == "IntList") {
            take();
            return Sort::IntList;
        }
        throw ParseError("unknown sort", t.span);
    }

    Expr parse_expr(int min_prec)
    {
        Expr lhs = parse_prefix();
        for (;;) {
            const OpInfo* info = binary_op(peek());
            if (!info || info->prec < min_prec)
                return lhs;
            Token op = take();
            Expr rhs = parse_expr(info->right_assoc ? info->prec : info->prec + 1);
            Expr node;
            node.op = op.text;
            node.span = op.span;
            node.kids.push_back(std::move(lhs));
            node.kids.push_back(std::move(rhs));
            lhs = std::move(node);
            if (info->comparison) {
                const OpInfo* after = binary_op(peek());
                if (after && after->comparison)
                    throw ParseError("comparison operators do not chain", peek().span);
            }
        }
    }

private:
    std::vector<Token> toks_;
    std::size_t pos_ = 0;

    Expr parse_prefix()
    {
        const Token& t = peek();
        Expr e;
        e.span = t.span;
        if (t.kind == Tok::Int) {
            e.op = "int";
            e.magnitude = take().magnitude;
            if (e.magnitude > static_cast<std::uint64_t>(INT64_MAX))
                throw ParseError("integer literal out of range", e.span);
            return e;
        }
        if (t.kind == Tok::Sym) {
            if (t.text == "-") {
                take();
                if (peek().kind != Tok::Int)
                    throw ParseError("unary minus applies only to integer literals", e.span);
                e.op = "int";
                e.negative = true;
                e.magnitude = take().magnitude;
                return e;
            }
            if (t.text == "~") {
                take();
                e.op = "not";
                e.kids.push_back(parse_expr(5));
                return e;
            }
            if (t.text == "(") {
                take();
                Expr inner = parse_expr(0);
                expect_sym(")");
                return inner;
            }
            if (t.text == "[") {
                take();
                e.op = "list";
                if (!is_sym("]")) {
                    e.kids.push_back(parse_expr(0));
                    while (is_sym(",")) {
                        take();
                        e.kids.push_back(parse_expr(0));
                    }
                }
                expect_sym("]");
                return e;
            }
            throw ParseError("unexpected '" + t.text + "'", t.span);
        }
        if (t.kind == Tok::Ident) {
            const std::string& w = t.text;
            if (w == "true" || w == "false") {
                e.op = take().text;
                return e;
            }
            if (w == "forall" || w == "exists") {
                e.op = take().text;
                Token b = expect_name();
                e.name = b.text;
                expect_sym(":");
                e.sort = expect_sort();
                expect_sym(",");
                e.kids.push_back(parse_expr(0));
                return e;
            }
            if (w == "if") {
                take();
                e.op = "ite";
                e.kids.push_back(parse_expr(0));
                expect_kw("then");
                e.kids.push_back(parse_expr(0));
                expect_kw("else");
                e.kids.push_back(parse_expr(0));
                return e;
            }
            if (w == "length") {
                take();
                e.op = "length";
                expect_sym("(");
                e.kids.push_back(parse_expr(0));
                expect_sym(")");
                return e;
            }
            if (w == "count") {
                take();
                e.op = "count";
                expect_sym("(");
                e.kids.push_back(parse_expr(0));
                expect_sym(",");
                e.kids.push_back(parse_expr(0));
                expect_sym(")");
                return e;
            }
            if (kReserved.contains(w))
                throw ParseError("unexpected keyword '" + w + "'", t.span);
            e.op = "var";
            e.name = take().text;
            return e;
        }
        throw ParseError("unexpected end of input", t.span);
    }
};

class Elaborator {
public:
    explicit Elaborator(std::vector<Binder> scope) : scope_(std::move(scope)) {}

    FormulaPtr formula(const Expr& e)
    {
        const std::string& op = e.op;
        if (op == "true")
            return f_true();
        if (op == "false")
            return f_false();
        if (op == "not")
            return neg(formula(e.kids[0]));
        if (op == "/\\")
            return conj(formula(e.kids[0]), formula(e.kids[1]));
        if (op == "\\/")
            return disj(formula(e.kids[0]), formula(e.kids[1]));
        if (op == "->")
            return implies(formula(e.kids[0]), formula(e.kids[1]));
        if (op == "forall" || op == "exists") {
            scope_.push_back({e.name, e.sort});
            FormulaPtr body = formula(e.kids[0]);
            scope_.pop_back();
            return op == "forall" ? forall(e.name, e.sort, body) : exists(e.name, e.sort, body);
        }
        if (op == "=" || op == "!=") {
            TermPtr l = term(e.kids[0]);
            TermPtr r = term(e.kids[1]);
            if (l->sort != r->sort)
                throw ParseError("sort mismatch: " + std::string(sort_name(l->sort)) + " vs " +
                        std::string(sort_name(r->sort)),
                    e.span);
            FormulaPtr f = eq(l, r);
            return op == "=" ? f : neg(f);
        }
        if (op == "<" || op == "<=" || op == ">" || op == ">=") {
            TermPtr l = term_of(e.kids[0], Sort::Int);
            TermPtr r = term_of(e.kids[1], Sort::Int);
            if (op == "<")
                return lt(l, r);
            if (op == "<=")
                return le(l, r);
            if (op == ">")
                return lt(r, l);
            return le(r, l);
        }
        if (op == "in")
            return mem(term_of(e.kids[0], Sort::Int), term_of(e.kids[1], Sort::IntList));
        throw ParseError("expected a proposition", e.span);
    }

    TermPtr term(const Expr& e)
    {
        const std::string& op = e.op;
        if (op == "int") {
            if (e.negative)
                return int_lit(e.magnitude == (std::uint64_t{1} << 63)
                        ? INT64_MIN
                        : -static_cast<std::int64_t>(e.magnitude));
            return int_lit(static_cast<std::int64_t>(e.magnitude));
        }
        if (op == "var") {
            for (auto it = scope_.rbegin(); it != scope_.rend(); ++it)
                if (it->name == e.name)
                    return var(e.name, it->sort);
            throw ParseError("unbound variable '" + e.name + "'", e.span);
        }
        if (op == "+" || op == "-" || op == "*" || op == "%") {
            TermPtr l = term_of(e.kids[0], Sort::Int);
            TermPtr r = term_of(e.kids[1], Sort::Int);
            if (op == "+")
                return add(l, r);
            if (op == "-")
                return sub(l, r);
            if (op == "*")
                return mul(l, r);
            return mod(l, r);
        }
        if (op == "list") {
            std::vector<TermPtr> elems;
            for (const auto& k : e.kids)
                elems.push_back(term_of(k, Sort::Int));
            return list_lit(std::move(elems));
        }
        if (op == "::")
            return cons(term_of(e.kids[0], Sort::Int), term_of(e.kids[1], Sort::IntList));
        if (op == "++")
            return append(term_of(e.kids[0], Sort::IntList), term_of(e.kids[1], Sort::IntList));
        if (op == "length")
            return length(term_of(e.kids[0], Sort::IntList));
        if (op == "count")
            return count(term_of(e.kids[0], Sort::IntList), term_of(e.kids[1], Sort::Int));
        if (op == "ite") {
            FormulaPtr c = formula(e.kids[0]);
            TermPtr th = term(e.kids[1]);
            TermPtr el = term(e.kids[2]);
            if (th->sort != el->sort)
                throw ParseError("if-then-else branches have different sorts", e.span);
            return ite(c, th, el);
        }
        throw ParseError("expected a term", e.span);
    }

private:
    std::vector<Binder> scope_;

    TermPtr term_of(const Expr& e, Sort want)
    {
        TermPtr t = term(e);
        if (t->sort != want)
            throw ParseError("expected " + std::string(sort_name(want)) + ", found " +
                    std::string(sort_name(t->sort)),
                e.span);
        return t;
    }
};

GoalDecl parse_decl(Parser& p)
{
    p.expect_kw("goal");
    GoalDecl g;
    Token name = p.expect_name();
    g.name = name.text;
    while (p.is_sym("(")) {
        p.take();
        std::vector<Token> names;
        names.push_back(p.expect_name());
        while (p.peek().kind == Tok::Ident && !kReserved.contains(p.peek().text))
            names.push_back(p.take());
        p.expect_sym(":");
        const Sort s = p.expect_sort();
        p.expect_sym(")");
        for (const auto& n : names) {
            for (const auto& b : g.binders)
                if (b.name == n.text)
                    throw ParseError("duplicate binder '" + n.text + "'", n.span);
            g.binders.push_back({n.text, s});
        }
    }
    p.expect_sym(":=");
    Expr body = p.parse_expr(0);
    g.body = Elaborator(g.binders).formula(body);
    return g;
}

} // namespace

std::vector<GoalDecl> parse_goal_file(std::string_view text)
{
    Parser p(Lexer(text).run());
    std::vector<GoalDecl> out;
    std::set<std::string> names;
    while (!p.at_end()) {
        const SourceSpan at = p.peek().span;
        GoalDecl g = parse_decl(p);
        if (!names.insert(g.name).second) {
            SourceSpan s = at;
            s.length = static_cast<int>(g.name.size());
            throw ParseError("duplicate goal name '" + g.name + "'", s);
        }
        out.push_back(std::move(g));
    }
    return out;
}

GoalDecl parse_goal(std::string_view text)
{
    auto goals = parse_goal_file(text);
    if (goals.size() != 1)
        throw ParseError("expected exactly one goal declaration", SourceSpan{1, 1, 0});
    return std::move(goals.front());
}

FormulaPtr parse_formula(std::string_view text, const std::vector<Binder>& scope)
{
    Parser p(Lexer(text).run());
    Expr e = p.parse_expr(0);
    if (!p.at_end())
        throw ParseError("trailing input", p.peek().span);
    return Elaborator(scope).formula(e);
}

namespace {

int prec(const Term& t)
{
    switch (t.kind) {
    case TermKind::Add:
    case TermKind::Sub:
        return 8;
    case TermKind::Mul:
    case TermKind::Mod:
        return 9;
    case TermKind::Cons:
        return 7;
    case TermKind::Append:
        return 6;
    case TermKind::Ite:
        return 0;
    default:
        return 10;
    }
}

int prec(const Formula& f)
{
    switch (f.kind) {
    case FormulaKind::Forall:
    case FormulaKind::Exists:
        return 0;
    case FormulaKind::Implies:
        return 1;
    case FormulaKind::Or:
        return 2;
    case FormulaKind::And:
        return 3;
    case FormulaKind::Not:
        return 4;
    case FormulaKind::Eq:
    case FormulaKind::Lt:
    case FormulaKind::Le:
    case FormulaKind::Mem:
        return 5;
    default:
        return 10;
    }
}

void emit(const Term& t, std::string& out);
void emit(const Formula& f, std::string& out);

void emit_child(const Term& t, int parent_prec, std::string& out)
{
    if (prec(t) <= parent_prec) {
        out += '(';
        emit(t, out);
        out += ')';
    } else {
        emit(t, out);
    }
}

void emit_child(const Formula& f, int parent_prec, std::string& out)
{
    if (prec(f) <= parent_prec) {
        out += '(';
        emit(f, out);
        out += ')';
    } else {
        emit(f, out);
    }
}

std::string_view term_op(TermKind k)
{
    switch (k) {
    case TermKind::Add: return " + ";
    case TermKind::Sub: return " - ";
    case TermKind::Mul: return " * ";
    case TermKind::Mod: return " % ";
    case TermKind::Cons: return " :: ";
    case TermKind::Append: return " ++ ";
    default: return "";
    }
}

void emit(const Term& t, std::string& out)
{
    switch (t.kind) {
    case TermKind::IntLit:
        out += std::to_string(t.value);
        return;
    case TermKind::Var:
        out += t.name;
        return;
    case TermKind::ListLit:
        out += '[';
        for (std::size_t i = 0; i < t.args.size(); ++i) {
            if (i)
                out += ", ";
            emit(*t.args[i], out);
        }
        out += ']';
        return;
    case TermKind::Length:
        out += "length(";
        emit(*t.args[0], out);
        out += ')';
        return;
    case TermKind::Count:
        out += "count(";
        emit(*t.args[0], out);
        out += ", ";
        emit(*t.args[1], out);
        out += ')';
        return;
    case TermKind::Ite:
        out += "if ";
        emit(*t.cond, out);
        out += " then ";
        emit(*t.args[0], out);
        out += " else ";
        emit(*t.args[1], out);
        return;
    default:
        emit_child(*t.args[0], prec(t), out);
        out += term_op(t.kind);
        emit_child(*t.args[1], prec(t), out);
        return;
    }
}

void emit(const Formula& f, std::string& out)
{
    switch (f.kind) {
    case FormulaKind::True:
        out += "true";
        return;
    case FormulaKind::False:
        out += "false";
        return;
    case FormulaKind::Eq:
    case FormulaKind::Lt:
    case FormulaKind::Le:
    case FormulaKind::Mem: {
        static constexpr std::array<std::string_view, 4> ops{" = ", " < ", " <= ", " in "};
        const auto idx = static_cast<std::size_t>(f.kind) - static_cast<std::size_t>(FormulaKind::Eq);
        emit_child(*f.terms[0], 5, out);
        out += ops[idx];
        emit_child(*f.terms[1], 5, out);
        return;
    }
    case FormulaKind::Not: {
        const auto& c = *f.subs[0];
        out += '~';
        if (c.kind == FormulaKind::True || c.kind == FormulaKind::False) {
            emit(c, out);
        } else {
            out += '(';
            emit(c, out);
            out += ')';
        }
        return;
    }
    case FormulaKind::And:
    case FormulaKind::Or:
    case FormulaKind::Implies: {
        const std::string_view op = f.kind == FormulaKind::And ? " /\\ " : f.kind == FormulaKind::Or ? " \\/ " : " -> ";
        emit_child(*f.subs[0], prec(f), out);
        out += op;
        emit_child(*f.subs[1], prec(f), out);
        return;
    }
    case FormulaKind::Forall:
    case FormulaKind::Exists:
        out += f.kind == FormulaKind::Forall ? "forall " : "exists ";
        out += f.binder;
        out += ": ";
        out += sort_name(f.binder_sort);
        out += ", ";
        emit(*f.subs[0], out);
        return;
    }
}

} // namespace

std::string print_term(const Term& t)
{
    std::string out;
    emit(t, out);
    return out;
}

std::string print_formula(const Formula& f)
{
    std::string out;
    emit(f, out);
    return out;
}

std::string print_goal(const GoalDecl& goal)
{
    std::string out = "goal " + goal.name;
    for (const auto& b : goal.binders) {
        out += " (";
        out += b.name;
        out += ": ";
        out += sort_name(b.sort);
        out += ')';
    }
    out += " := ";
    emit(*goal.body, out);
    return out;
}

std::string print_goal_file(const std::vector<GoalDecl>& goals)
{
    std::string out;
    for (const auto& g : goals) {
        out += print_goal(g);
        out += '\n';
    }
    return out;
}

} // namespace hps
