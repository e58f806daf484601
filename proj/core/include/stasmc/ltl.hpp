#pragma once
// Bounded LTL over finite boolean traces, evaluated directly from the
// definitions. Serves as the reference for the block patterns.

#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace stasmc::ltl {

class LtlError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

struct Formula {
  enum class Op { True, False, Atom, Not, And, Or, Implies, Always, Eventually, Until } op = Op::True;
  std::string atom;
  int lo = 0, hi = 0;  // step interval of temporal operators
  std::vector<FormulaPtr> kids;
};

// Grammar, loosest first: a -> b (right assoc), a | b, a & b,
// a U[lo,hi] b, then !a, G[lo,hi] a, F[lo,hi] a, (a), true, false, names.
FormulaPtr parse(const std::string& text);
std::string to_string(const Formula& f);

FormulaPtr atom(const std::string& name);
FormulaPtr negation(FormulaPtr f);
FormulaPtr conjunction(FormulaPtr a, FormulaPtr b);
FormulaPtr implication(FormulaPtr a, FormulaPtr b);
FormulaPtr always(int lo, int hi, FormulaPtr f);
FormulaPtr eventually(int lo, int hi, FormulaPtr f);
FormulaPtr until(int lo, int hi, FormulaPtr p, FormulaPtr q);

// Largest step offset the formula looks ahead from its evaluation point.
int horizon(const Formula& f);

using BoolTrace = std::map<std::string, std::vector<bool>>;

// Truth at step `pos` of a trace of `length` steps. Steps past the end do
// not exist: G over them holds vacuously, F over them fails.
// p U[lo,hi] q holds when q occurs somewhere in [pos+lo, pos+hi] and every
// step of that window has p or q.
bool holds(const Formula& f, const BoolTrace& trace, int length, int pos = 0);

}  // namespace stasmc::ltl
