#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "hps/ast.hpp"
#include "hps/error.hpp"

namespace hps {

// Goal file grammar (ASCII canonical; Unicode aliases accepted on input):
//
//   file    := { decl }
//   decl    := "goal" IDENT { "(" IDENT {IDENT} ":" sort ")" } ":=" formula
//   sort    := "Int" | "IntList"
//
// Formula / term operators, loosest first:
//   forall x: S, _   exists x: S, _   if _ then _ else _   (extend right)
//   ->  (right)   \/  (right)   /\  (right)   ~ (prefix)
//   =  !=  <  <=  >  >=  in     (non-associative)
//   ++ (left)   :: (right)   + - (left)   * % (left)
//   atoms: integers, names, [a, b, ...], length(l), count(l, x), true, false
//
// `a > b` and `a >= b` elaborate to `b < a` / `b <= a`; `a != b` to `~(a = b)`.
// Comments run from `#` to end of line.

/// Parses every declaration in source order. Throws ParseError.
std::vector<GoalDecl> parse_goal_file(std::string_view text);

/// Parses a single declaration (the whole input must be exactly one decl).
GoalDecl parse_goal(std::string_view text);

/// Parses a formula whose free variables must be among `scope`.
FormulaPtr parse_formula(std::string_view text, const std::vector<Binder>& scope = {});

std::string print_goal(const GoalDecl& goal);
std::string print_formula(const Formula& f);
std::string print_term(const Term& t);

/// Renders several declarations as a goal file, one per line.
std::string print_goal_file(const std::vector<GoalDecl>& goals);

} // namespace hps
