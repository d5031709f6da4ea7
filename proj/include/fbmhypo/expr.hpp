#pragma once

// Expression DSL for smooth vector fields on R^n.
//
// Expressions are immutable trees over variables x1..xn, real constants,
// + - * /, integer powers and the C^infinity primitives sin, cos, exp, tanh.
// Node constructors fold constants and apply the 0/1 identities; nothing else
// is simplified.

#include "fbmhypo/errors.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fbmhypo::expr {

enum class Op : std::uint8_t { Const, Var, Neg, Add, Sub, Mul, Div, Pow, Sin, Cos, Exp, Tanh };

class Expr {
 public:
  /// The constant 0.
  Expr();

  static Expr constant(double value);
  /// Zero-based variable index: variable(0) is x1.
  static Expr variable(int index);

  Op op() const noexcept;
  double value() const;     // Const only
  int index() const;        // Var only
  int exponent() const;     // Pow only
  const Expr& lhs() const;  // first operand (unary ops: the argument)
  const Expr& rhs() const;  // second operand of binary ops

  bool is_constant() const noexcept { return op() == Op::Const; }
  bool is_zero() const noexcept;
  bool is_one() const noexcept;

  /// Largest variable index used, or -1 for a closed expression.
  int max_variable() const;

  /// Recursive evaluation. Throws DomainError on division by zero (or a
  /// negative power of zero).
  double eval(std::span<const double> x) const;

  /// Exact partial derivative with respect to x_{var+1}.
  Expr derivative(int var) const;

  /// Parseable text; constants print with 17 significant digits.
  std::string to_string() const;

  /// Number of nodes in the tree (shared subtrees counted once per use).
  std::size_t node_count() const;

 private:
  struct Node;
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  static Expr make(Op op, Expr a, Expr b, double value, int ivalue);

  std::shared_ptr<const Node> node_;

  friend Expr operator+(const Expr&, const Expr&);
  friend Expr operator-(const Expr&, const Expr&);
  friend Expr operator*(const Expr&, const Expr&);
  friend Expr operator/(const Expr&, const Expr&);
  friend Expr operator-(const Expr&);
  friend Expr pow(const Expr&, int);
  friend Expr sin(const Expr&);
  friend Expr cos(const Expr&);
  friend Expr exp(const Expr&);
  friend Expr tanh(const Expr&);
};

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr pow(const Expr& base, int exponent);
Expr sin(const Expr& a);
Expr cos(const Expr& a);
Expr exp(const Expr& a);
Expr tanh(const Expr& a);

/// A vector field: one expression per component.
using FieldVector = std::vector<Expr>;
/// Row i is component i, column j is d/dx_{j+1}.
using ExprMatrix = std::vector<std::vector<Expr>>;

Eigen::VectorXd evaluate(const FieldVector& field, std::span<const double> x);
Eigen::MatrixXd evaluate(const ExprMatrix& m, std::span<const double> x);

/// Symbolic Jacobian DV (n x n).
ExprMatrix jacobian(const FieldVector& field);

/// M * v as expressions; each component is the left-to-right sum over j.
FieldVector multiply(const ExprMatrix& m, const FieldVector& v);

/// [V, W] = DW V - DV W. Throws DomainError on a dimension mismatch.
FieldVector lie_bracket(const FieldVector& v, const FieldVector& w);

std::string to_string(const FieldVector& field);

/// Parses a single expression over x1..xn.
Expr parse_expression(std::string_view text, int n);

/// The drift V0 and the noise fields V1..Vd of an SDE on R^n.
struct VectorFieldSet {
  int n = 0;
  int d = 0;
  std::vector<FieldVector> fields;    // d + 1 entries, index 0 is the drift
  std::vector<bool> bounded_claimed;  // user assertion per field, not checked

  const FieldVector& drift() const { return fields.at(0); }
  const FieldVector& noise(int i) const { return fields.at(static_cast<std::size_t>(i)); }

  /// True if every noise field is constant and the drift is affine.
  bool additive_affine() const;

  /// Text in the field-set format accepted by parse_field_set.
  std::string to_string() const;
};

/// Parses lines `V<k> = [expr, ...]` (optionally followed by `bounded`),
/// separated by newlines or ';'. `#` starts a comment.
VectorFieldSet parse_field_set(std::string_view text, int n, int d);

/// Flat postfix program evaluating a list of expressions in one pass.
///
/// The hot loops of the solver use this instead of walking the trees.
class Program {
 public:
  Program() = default;
  explicit Program(std::span<const Expr> outputs);

  std::size_t outputs() const noexcept { return n_outputs_; }

  /// Writes every output into `out`. `stack` is caller-owned scratch.
  void run(std::span<const double> x, std::span<double> out, std::vector<double>& stack) const;

 private:
  struct Instr {
    Op op;
    int ivalue;
    double value;
  };
  void emit(const Expr& e);

  std::vector<Instr> code_;
  std::vector<std::size_t> ends_;  // code_ offset after each output
  std::size_t n_outputs_ = 0;
  std::size_t max_depth_ = 0;
};

}  // namespace fbmhypo::expr
