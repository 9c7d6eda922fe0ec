#pragma once

#include <cstdint>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hps {

enum class Sort : std::uint8_t { Int, IntList };

std::string_view sort_name(Sort s);

enum class TermKind : std::uint8_t {
    IntLit,
    Var,
    Add,
    Sub,
    Mul,
    Mod,
    ListLit,
    Cons,
    Append,
    Length,
    Count,
    Ite
};

enum class FormulaKind : std::uint8_t {
    True,
    False,
    Eq,
    Lt,
    Le,
    Mem,
    Not,
    And,
    Or,
    Implies,
    Forall,
    Exists
};

struct Term;
struct Formula;
using TermPtr = std::shared_ptr<const Term>;
using FormulaPtr = std::shared_ptr<const Formula>;

// Immutable term node. `sort` is the result sort, fixed at construction.
// Children layout by kind:
//   binary arithmetic / Cons / Append : args = {left, right}   (Cons: {head, tail})
//   ListLit                           : args = elements
//   Length                            : args = {list}
//   Count                             : args = {list, element}
//   Ite                               : cond, args = {then, else}
struct Term {
    TermKind kind = TermKind::IntLit;
    Sort sort = Sort::Int;
    std::int64_t value = 0;
    std::string name;
    std::vector<TermPtr> args;
    FormulaPtr cond;
};

// Immutable formula node.
//   Eq/Lt/Le   : terms = {left, right}
//   Mem        : terms = {element, list}
//   Not        : subs = {child}
//   And/Or/Implies : subs = {left, right}
//   Forall/Exists  : binder, binder_sort, subs = {body}
struct Formula {
    FormulaKind kind = FormulaKind::True;
    std::vector<TermPtr> terms;
    std::vector<FormulaPtr> subs;
    std::string binder;
    Sort binder_sort = Sort::Int;
};

struct Binder {
    std::string name;
    Sort sort = Sort::Int;

    friend bool operator==(const Binder&, const Binder&) = default;
};

struct GoalDecl {
    std::string name;
    std::vector<Binder> binders;
    FormulaPtr body;
};

bool operator==(const Term& a, const Term& b);
bool operator==(const Formula& a, const Formula& b);
bool operator==(const GoalDecl& a, const GoalDecl& b);
bool same(const TermPtr& a, const TermPtr& b);
bool same(const FormulaPtr& a, const FormulaPtr& b);

// Term constructors.
TermPtr int_lit(std::int64_t v);
TermPtr var(std::string name, Sort sort);
TermPtr add(TermPtr l, TermPtr r);
TermPtr sub(TermPtr l, TermPtr r);
TermPtr mul(TermPtr l, TermPtr r);
TermPtr mod(TermPtr l, TermPtr r);
TermPtr list_lit(std::vector<TermPtr> elems);
TermPtr cons(TermPtr head, TermPtr tail);
TermPtr append(TermPtr l, TermPtr r);
TermPtr length(TermPtr list);
TermPtr count(TermPtr list, TermPtr elem);
TermPtr ite(FormulaPtr c, TermPtr t, TermPtr e);
TermPtr make_term(TermKind kind, std::vector<TermPtr> args);

// Formula constructors.
FormulaPtr f_true();
FormulaPtr f_false();
FormulaPtr eq(TermPtr l, TermPtr r);
FormulaPtr lt(TermPtr l, TermPtr r);
FormulaPtr le(TermPtr l, TermPtr r);
FormulaPtr mem(TermPtr elem, TermPtr list);
FormulaPtr neg(FormulaPtr f);
FormulaPtr conj(FormulaPtr l, FormulaPtr r);
FormulaPtr disj(FormulaPtr l, FormulaPtr r);
FormulaPtr implies(FormulaPtr l, FormulaPtr r);
FormulaPtr forall(std::string binder, Sort sort, FormulaPtr body);
FormulaPtr exists(std::string binder, Sort sort, FormulaPtr body);
FormulaPtr make_connective(FormulaKind kind, FormulaPtr l, FormulaPtr r);
FormulaPtr make_atom(FormulaKind kind, TermPtr l, TermPtr r);

/// Operator footprint: one per operator node, zero for variables, literals,
/// list literals, TrueF/FalseF and binder annotations.
std::int64_t operator_footprint(const Formula& f);
std::int64_t operator_footprint(const Term& t);

std::set<std::string> free_vars(const Formula& f);
std::set<std::string> free_vars(const Term& t);

/// Replaces free occurrences of `name` by `value`. `value` must be closed.
FormulaPtr substitute(const FormulaPtr& f, const std::string& name, const TermPtr& value);
TermPtr substitute(const TermPtr& t, const std::string& name, const TermPtr& value);

/// Flattens a right- or left-nested And tree into its non-And leaves.
std::vector<FormulaPtr> conjuncts(const FormulaPtr& f);

/// Canonical text for a goal up to binder renaming and goal name.
std::string alpha_key(const GoalDecl& g);
bool alpha_equivalent(const GoalDecl& a, const GoalDecl& b);

/// Binders of `goal` that occur free in `body`, in declaration order.
std::vector<Binder> binders_used_by(const std::vector<Binder>& binders, const Formula& body);

} // namespace hps
