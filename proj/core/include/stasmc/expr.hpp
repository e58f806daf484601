#pragma once
// Expression language shared by guards, invariants, updates, rates and
// query predicates. Source text is parsed into an Ast, then compiled against
// a Resolver into a flat node array that evaluates without name lookups.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace stasmc {

class ExprError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ValueKind { Int, Bool, Real };
const char* to_string(ValueKind k);

namespace expr {

enum class Op : std::uint8_t {
  Const,
  Ref,   // resolved reference, see RefKind
  Index, // global array element
  Neg, Not,
  Add, Sub, Mul, Div, Mod,
  Lt, Le, Gt, Ge, Eq, Ne,
  And, Or,
};

// ---- parse tree -----------------------------------------------------------

struct Ast {
  Op op = Op::Const;
  double value = 0;         // Const
  ValueKind kind = ValueKind::Int;  // literal kind for Const
  std::string name;         // Ref / Index: dotted identifier
  std::vector<std::shared_ptr<Ast>> kids;
};
using AstPtr = std::shared_ptr<Ast>;

AstPtr parse(const std::string& text);

struct Assignment {
  std::string target;   // identifier (possibly dotted)
  AstPtr index;         // non-null for arr[i] = ...
  AstPtr value;
};
Assignment parse_assignment(const std::string& text);

// Names of every identifier referenced by the tree (dotted form).
void collect_names(const Ast& a, std::vector<std::string>& out);
std::string to_text(const Ast& a);

// ---- resolution -----------------------------------------------------------

enum class RefKind : std::uint8_t {
  Constant,     // folded value (template parameter of a static instance, named constant)
  Global,       // globals[slot]
  GlobalArray,  // globals[slot + idx], size in aux; only valid under Index
  SelfVar,      // current instance vars[slot]
  SelfClock,    // current instance clocks[slot]
  InstVar,      // static instance `inst`, vars[slot]
  InstClock,    // static instance `inst`, clocks[slot]
  InstAt,       // static instance `inst` is at location `slot`
  InstLabel,    // static instance `inst` current location carries label `slot`
  AnyAt,        // some live instance of template `inst` is at location `slot`
  AnyLabel,     // some live instance of template `inst` carries label `slot`
  Time,         // global elapsed time
};

struct Resolved {
  RefKind ref = RefKind::Constant;
  ValueKind kind = ValueKind::Real;
  int inst = -1;
  int slot = 0;
  int size = 0;  // arrays
  double value = 0;
};

using Resolver = std::function<std::optional<Resolved>(const std::string& name)>;

struct Node {
  Op op;
  ValueKind kind;
  RefKind ref;
  int a = -1, b = -1;   // child node indices
  int inst = -1;
  int slot = 0;
  int size = 0;
  double value = 0;
};

// Read access to whatever state the expression is evaluated over. The
// simulator implements this; tests can use simple adapters.
class Env {
 public:
  virtual ~Env() = default;
  virtual double global(int slot) const = 0;
  virtual double self_var(int slot) const = 0;
  virtual double self_clock(int slot) const = 0;
  virtual double self_clock_rate(int slot) const = 0;
  virtual double inst_var(int inst, int slot) const = 0;
  virtual double inst_clock(int inst, int slot) const = 0;
  virtual double inst_clock_rate(int inst, int slot) const = 0;
  virtual bool inst_at(int inst, int loc) const = 0;
  virtual bool inst_label(int inst, int label) const = 0;
  virtual bool any_at(int tmpl, int loc) const = 0;
  virtual bool any_label(int tmpl, int label) const = 0;
  virtual double time() const = 0;
};

class Compiled {
 public:
  Compiled() = default;
  bool empty() const { return nodes_.empty(); }
  ValueKind kind() const { return nodes_.empty() ? ValueKind::Bool : nodes_.back().kind; }

  // Value with every clock advanced by dt * rate.
  double eval(const Env& env, double dt = 0) const;
  bool holds(const Env& env, double dt = 0) const { return eval(env, dt) != 0; }

  // Value and time derivative at dt, if the expression is affine in the
  // delay (true for sums/differences of clocks scaled by constants).
  std::optional<std::pair<double, double>> affine(const Env& env, double dt = 0) const;

  // Top-level conjuncts (for guard window analysis), each as its own Compiled.
  std::vector<Compiled> conjuncts() const;
  // Every numeric comparison node that mentions a clock or time, as its own
  // Compiled (used to locate the instants where a predicate may flip).
  std::vector<Compiled> clock_comparisons() const;
  // Split a comparison into (lhs - rhs) and the operator; nullopt otherwise.
  std::optional<std::pair<Compiled, Op>> comparison_difference() const;

  bool mentions_clock() const;
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::string& text() const { return text_; }

  friend Compiled compile(const Ast&, const Resolver&, const std::string&);
  friend Compiled constant(double v, ValueKind k);

 private:
  double eval_node(int i, const Env& env, double dt) const;
  bool affine_node(int i, const Env& env, double dt, double& v, double& s) const;
  Compiled subtree(int root) const;
  std::vector<Node> nodes_;
  std::string text_;
};

Compiled compile(const Ast& ast, const Resolver& resolve, const std::string& text = "");
Compiled compile(const std::string& text, const Resolver& resolve);
Compiled constant(double v, ValueKind k = ValueKind::Real);

// Coercion applied when storing into a variable of the given kind.
double coerce(double v, ValueKind k);
bool assignable(ValueKind target, ValueKind value);

}  // namespace expr
}  // namespace stasmc
