#include "hps/ast.hpp"

#include <map>

#include "hps/error.hpp"
#include "hps/syntax.hpp"

namespace hps {

std::string_view sort_name(Sort s)
{
    return s == Sort::Int ? "Int" : "IntList";
}

bool same(const TermPtr& a, const TermPtr& b)
{
    if (a == b)
        return true;
    if (!a || !b)
        return false;
    return *a == *b;
}

bool same(const FormulaPtr& a, const FormulaPtr& b)
{
    if (a == b)
        return true;
    if (!a || !b)
        return false;
    return *a == *b;
}

bool operator==(const Term& a, const Term& b)
{
    if (a.kind != b.kind || a.sort != b.sort || a.value != b.value || a.name != b.name)
        return false;
    if (a.args.size() != b.args.size())
        return false;
    for (std::size_t i = 0; i < a.args.size(); ++i)
        if (!same(a.args[i], b.args[i]))
            return false;
    return same(a.cond, b.cond);
}

bool operator==(const Formula& a, const Formula& b)
{
    if (a.kind != b.kind || a.binder != b.binder || a.binder_sort != b.binder_sort)
        return false;
    if (a.terms.size() != b.terms.size() || a.subs.size() != b.subs.size())
        return false;
    for (std::size_t i = 0; i < a.terms.size(); ++i)
        if (!same(a.terms[i], b.terms[i]))
            return false;
    for (std::size_t i = 0; i < a.subs.size(); ++i)
        if (!same(a.subs[i], b.subs[i]))
            return false;
    return true;
}

bool operator==(const GoalDecl& a, const GoalDecl& b)
{
    return a.name == b.name && a.binders == b.binders && same(a.body, b.body);
}

namespace {

TermPtr make(Term t)
{
    return std::make_shared<const Term>(std::move(t));
}

FormulaPtr make(Formula f)
{
    return std::make_shared<const Formula>(std::move(f));
}

void require(bool ok, const char* what)
{
    if (!ok)
        throw ContractViolation(what);
}

TermPtr arith(TermKind kind, TermPtr l, TermPtr r)
{
    require(l && r && l->sort == Sort::Int && r->sort == Sort::Int, "arithmetic operands must be Int");
    Term t;
    t.kind = kind;
    t.sort = Sort::Int;
    t.args = {std::move(l), std::move(r)};
    return make(std::move(t));
}

} // namespace

TermPtr int_lit(std::int64_t v)
{
    Term t;
    t.kind = TermKind::IntLit;
    t.value = v;
    return make(std::move(t));
}

TermPtr var(std::string name, Sort sort)
{
    Term t;
    t.kind = TermKind::Var;
    t.sort = sort;
    t.name = std::move(name);
    return make(std::move(t));
}

TermPtr add(TermPtr l, TermPtr r) { return arith(TermKind::Add, std::move(l), std::move(r)); }
TermPtr sub(TermPtr l, TermPtr r) { return arith(TermKind::Sub, std::move(l), std::move(r)); }
TermPtr mul(TermPtr l, TermPtr r) { return arith(TermKind::Mul, std::move(l), std::move(r)); }
TermPtr mod(TermPtr l, TermPtr r) { return arith(TermKind::Mod, std::move(l), std::move(r)); }

TermPtr list_lit(std::vector<TermPtr> elems)
{
    for (const auto& e : elems)
        require(e && e->sort == Sort::Int, "list literal elements must be Int");
    Term t;
    t.kind = TermKind::ListLit;
    t.sort = Sort::IntList;
    t.args = std::move(elems);
    return make(std::move(t));
}

TermPtr cons(TermPtr head, TermPtr tail)
{
    require(head && tail && head->sort == Sort::Int && tail->sort == Sort::IntList, "cons expects Int :: IntList");
    Term t;
    t.kind = TermKind::Cons;
    t.sort = Sort::IntList;
    t.args = {std::move(head), std::move(tail)};
    return make(std::move(t));
}

TermPtr append(TermPtr l, TermPtr r)
{
    require(l && r && l->sort == Sort::IntList && r->sort == Sort::IntList, "append operands must be IntList");
    Term t;
    t.kind = TermKind::Append;
    t.sort = Sort::IntList;
    t.args = {std::move(l), std::move(r)};
    return make(std::move(t));
}

TermPtr length(TermPtr list)
{
    require(list && list->sort == Sort::IntList, "length expects IntList");
    Term t;
    t.kind = TermKind::Length;
    t.args = {std::move(list)};
    return make(std::move(t));
}

TermPtr count(TermPtr list, TermPtr elem)
{
    require(list && elem && list->sort == Sort::IntList && elem->sort == Sort::Int, "count expects (IntList, Int)");
    Term t;
    t.kind = TermKind::Count;
    t.args = {std::move(list), std::move(elem)};
    return make(std::move(t));
}

TermPtr ite(FormulaPtr c, TermPtr th, TermPtr el)
{
    require(c && th && el && th->sort == el->sort, "if-then-else branches must share a sort");
    Term t;
    t.kind = TermKind::Ite;
    t.sort = th->sort;
    t.cond = std::move(c);
    t.args = {std::move(th), std::move(el)};
    return make(std::move(t));
}

TermPtr make_term(TermKind kind, std::vector<TermPtr> args)
{
    switch (kind) {
    case TermKind::Add:
    case TermKind::Sub:
    case TermKind::Mul:
    case TermKind::Mod:
        require(args.size() == 2, "binary term expects two children");
        return arith(kind, args[0], args[1]);
    case TermKind::Cons:
        require(args.size() == 2, "cons expects two children");
        return cons(args[0], args[1]);
    case TermKind::Append:
        require(args.size() == 2, "append expects two children");
        return append(args[0], args[1]);
    case TermKind::Length:
        require(args.size() == 1, "length expects one child");
        return length(args[0]);
    case TermKind::Count:
        require(args.size() == 2, "count expects two children");
        return count(args[0], args[1]);
    case TermKind::ListLit:
        return list_lit(std::move(args));
    default:
        throw ContractViolation("make_term: unsupported kind");
    }
}

FormulaPtr f_true()
{
    static const FormulaPtr t = make(Formula{FormulaKind::True, {}, {}, {}, Sort::Int});
    return t;
}

FormulaPtr f_false()
{
    static const FormulaPtr f = make(Formula{FormulaKind::False, {}, {}, {}, Sort::Int});
    return f;
}

FormulaPtr make_atom(FormulaKind kind, TermPtr l, TermPtr r)
{
    require(l && r, "atom operands must be non-null");
    switch (kind) {
    case FormulaKind::Eq:
        require(l->sort == r->sort, "equality operands must share a sort");
        break;
    case FormulaKind::Lt:
    case FormulaKind::Le:
        require(l->sort == Sort::Int && r->sort == Sort::Int, "order comparison expects Int operands");
        break;
    case FormulaKind::Mem:
        require(l->sort == Sort::Int && r->sort == Sort::IntList, "membership expects Int in IntList");
        break;
    default:
        throw ContractViolation("make_atom: not an atom kind");
    }
    Formula f;
    f.kind = kind;
    f.terms = {std::move(l), std::move(r)};
    return make(std::move(f));
}

FormulaPtr eq(TermPtr l, TermPtr r) { return make_atom(FormulaKind::Eq, std::move(l), std::move(r)); }
FormulaPtr lt(TermPtr l, TermPtr r) { return make_atom(FormulaKind::Lt, std::move(l), std::move(r)); }
FormulaPtr le(TermPtr l, TermPtr r) { return make_atom(FormulaKind::Le, std::move(l), std::move(r)); }
FormulaPtr mem(TermPtr e, TermPtr l) { return make_atom(FormulaKind::Mem, std::move(e), std::move(l)); }

FormulaPtr neg(FormulaPtr c)
{
    require(c != nullptr, "negation of null formula");
    Formula f;
    f.kind = FormulaKind::Not;
    f.subs = {std::move(c)};
    return make(std::move(f));
}

FormulaPtr make_connective(FormulaKind kind, FormulaPtr l, FormulaPtr r)
{
    require(kind == FormulaKind::And || kind == FormulaKind::Or || kind == FormulaKind::Implies,
        "make_connective: not a binary connective");
    require(l && r, "connective operands must be non-null");
    Formula f;
    f.kind = kind;
    f.subs = {std::move(l), std::move(r)};
    return make(std::move(f));
}

FormulaPtr conj(FormulaPtr l, FormulaPtr r) { return make_connective(FormulaKind::And, std::move(l), std::move(r)); }
FormulaPtr disj(FormulaPtr l, FormulaPtr r) { return make_connective(FormulaKind::Or, std::move(l), std::move(r)); }
FormulaPtr implies(FormulaPtr l, FormulaPtr r) { return make_connective(FormulaKind::Implies, std::move(l), std::move(r)); }

namespace {

FormulaPtr quant(FormulaKind kind, std::string binder, Sort sort, FormulaPtr body)
{
    require(body != nullptr, "quantifier body must be non-null");
    Formula f;
    f.kind = kind;
    f.binder = std::move(binder);
    f.binder_sort = sort;
    f.subs = {std::move(body)};
    return make(std::move(f));
}

} // namespace

FormulaPtr forall(std::string b, Sort s, FormulaPtr body) { return quant(FormulaKind::Forall, std::move(b), s, std::move(body)); }
FormulaPtr exists(std::string b, Sort s, FormulaPtr body) { return quant(FormulaKind::Exists, std::move(b), s, std::move(body)); }

std::int64_t operator_footprint(const Term& t)
{
    std::int64_t n = 0;
    switch (t.kind) {
    case TermKind::IntLit:
    case TermKind::Var:
    case TermKind::ListLit:
        break;
    default:
        n = 1;
    }
    for (const auto& a : t.args)
        n += operator_footprint(*a);
    if (t.cond)
        n += operator_footprint(*t.cond);
    return n;
}

std::int64_t operator_footprint(const Formula& f)
{
    std::int64_t n = (f.kind == FormulaKind::True || f.kind == FormulaKind::False) ? 0 : 1;
    for (const auto& t : f.terms)
        n += operator_footprint(*t);
    for (const auto& s : f.subs)
        n += operator_footprint(*s);
    return n;
}

namespace {

void collect_free(const Term& t, std::set<std::string>& bound, std::set<std::string>& out);

void collect_free(const Formula& f, std::set<std::string>& bound, std::set<std::string>& out)
{
    for (const auto& t : f.terms)
        collect_free(*t, bound, out);
    if (f.kind == FormulaKind::Forall || f.kind == FormulaKind::Exists) {
        const bool inserted = bound.insert(f.binder).second;
        collect_free(*f.subs[0], bound, out);
        if (inserted)
            bound.erase(f.binder);
        return;
    }
    for (const auto& s : f.subs)
        collect_free(*s, bound, out);
}

void collect_free(const Term& t, std::set<std::string>& bound, std::set<std::string>& out)
{
    if (t.kind == TermKind::Var) {
        if (!bound.contains(t.name))
            out.insert(t.name);
        return;
    }
    for (const auto& a : t.args)
        collect_free(*a, bound, out);
    if (t.cond)
        collect_free(*t.cond, bound, out);
}

} // namespace

std::set<std::string> free_vars(const Formula& f)
{
    std::set<std::string> bound, out;
    collect_free(f, bound, out);
    return out;
}

std::set<std::string> free_vars(const Term& t)
{
    std::set<std::string> bound, out;
    collect_free(t, bound, out);
    return out;
}

TermPtr substitute(const TermPtr& t, const std::string& name, const TermPtr& value)
{
    if (t->kind == TermKind::Var)
        return t->name == name ? value : t;
    if (t->args.empty() && !t->cond)
        return t;
    Term copy = *t;
    bool changed = false;
    for (auto& a : copy.args) {
        auto n = substitute(a, name, value);
        changed |= n != a;
        a = std::move(n);
    }
    if (copy.cond) {
        auto n = substitute(copy.cond, name, value);
        changed |= n != copy.cond;
        copy.cond = std::move(n);
    }
    return changed ? make(std::move(copy)) : t;
}

FormulaPtr substitute(const FormulaPtr& f, const std::string& name, const TermPtr& value)
{
    if ((f->kind == FormulaKind::Forall || f->kind == FormulaKind::Exists) && f->binder == name)
        return f;
    Formula copy = *f;
    bool changed = false;
    for (auto& t : copy.terms) {
        auto n = substitute(t, name, value);
        changed |= n != t;
        t = std::move(n);
    }
    for (auto& s : copy.subs) {
        auto n = substitute(s, name, value);
        changed |= n != s;
        s = std::move(n);
    }
    return changed ? make(std::move(copy)) : f;
}

std::vector<FormulaPtr> conjuncts(const FormulaPtr& f)
{
    std::vector<FormulaPtr> out;
    std::vector<FormulaPtr> stack{f};
    while (!stack.empty()) {
        auto cur = stack.back();
        stack.pop_back();
        if (cur->kind == FormulaKind::And) {
            stack.push_back(cur->subs[1]);
            stack.push_back(cur->subs[0]);
        } else {
            out.push_back(std::move(cur));
        }
    }
    return out;
}

namespace {

using Renaming = std::vector<std::pair<std::string, std::string>>;

std::string lookup(const Renaming& r, const std::string& name)
{
    for (auto it = r.rbegin(); it != r.rend(); ++it)
        if (it->first == name)
            return it->second;
    return name;
}

TermPtr rename(const TermPtr& t, Renaming& r, int& counter);

FormulaPtr rename(const FormulaPtr& f, Renaming& r, int& counter)
{
    Formula copy = *f;
    for (auto& t : copy.terms)
        t = rename(t, r, counter);
    if (f->kind == FormulaKind::Forall || f->kind == FormulaKind::Exists) {
        std::string fresh = "v" + std::to_string(counter++);
        r.emplace_back(f->binder, fresh);
        copy.binder = fresh;
        copy.subs[0] = rename(f->subs[0], r, counter);
        r.pop_back();
        return make(std::move(copy));
    }
    for (auto& s : copy.subs)
        s = rename(s, r, counter);
    return make(std::move(copy));
}

TermPtr rename(const TermPtr& t, Renaming& r, int& counter)
{
    if (t->kind == TermKind::Var)
        return var(lookup(r, t->name), t->sort);
    Term copy = *t;
    for (auto& a : copy.args)
        a = rename(a, r, counter);
    if (copy.cond)
        copy.cond = rename(copy.cond, r, counter);
    return make(std::move(copy));
}

} // namespace

std::string alpha_key(const GoalDecl& g)
{
    Renaming r;
    int counter = 0;
    GoalDecl canon;
    canon.name = "_";
    for (const auto& b : g.binders) {
        std::string fresh = "v" + std::to_string(counter++);
        r.emplace_back(b.name, fresh);
        canon.binders.push_back({fresh, b.sort});
    }
    canon.body = rename(g.body, r, counter);
    return print_goal(canon);
}

bool alpha_equivalent(const GoalDecl& a, const GoalDecl& b)
{
    return alpha_key(a) == alpha_key(b);
}

std::vector<Binder> binders_used_by(const std::vector<Binder>& binders, const Formula& body)
{
    const auto fv = free_vars(body);
    std::vector<Binder> out;
    for (const auto& b : binders)
        if (fv.contains(b.name))
            out.push_back(b);
    return out;
}

} // namespace hps
