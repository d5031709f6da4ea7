#include "fbmhypo/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <optional>

namespace fbmhypo::expr {

struct Expr::Node {
  Op op;
  double value = 0.0;  // Const
  int ivalue = 0;      // Var index, Pow exponent
  Expr a;
  Expr b;
};

namespace {

int precedence(Op op) {
  switch (op) {
    case Op::Add:
    case Op::Sub:
      return 1;
    case Op::Mul:
    case Op::Div:
      return 2;
    case Op::Neg:
      return 3;
    case Op::Pow:
      return 4;
    default:
      return 5;
  }
}

bool is_binary(Op op) {
  return op == Op::Add || op == Op::Sub || op == Op::Mul || op == Op::Div;
}

double checked_pow(double base, int k) {
  if (k < 0 && base == 0.0) throw DomainError("negative power of zero");
  return std::pow(base, k);
}

double checked_div(double a, double b) {
  if (b == 0.0) throw DomainError("division by zero");
  return a / b;
}

}  // namespace

// A null node is the constant 0; this keeps default construction cheap and
// non-recursive.
Expr::Expr() = default;

// Node construction without folding; the public operators fold first.
Expr Expr::make(Op op, Expr a, Expr b, double value, int ivalue) {
  auto node = std::make_shared<Node>();
  node->op = op;
  node->value = value;
  node->ivalue = ivalue;
  node->a = std::move(a);
  node->b = std::move(b);
  return Expr(std::shared_ptr<const Node>(std::move(node)));
}

Expr Expr::constant(double value) {
  auto node = std::make_shared<Node>();
  node->op = Op::Const;
  node->value = value;
  return Expr(std::shared_ptr<const Node>(std::move(node)));
}

Expr Expr::variable(int index) {
  if (index < 0) throw DomainError("variable index must be non-negative");
  auto node = std::make_shared<Node>();
  node->op = Op::Var;
  node->ivalue = index;
  return Expr(std::shared_ptr<const Node>(std::move(node)));
}

Op Expr::op() const noexcept { return node_ ? node_->op : Op::Const; }

double Expr::value() const {
  if (op() != Op::Const) throw DomainError("Expr::value on a non-constant");
  return node_ ? node_->value : 0.0;
}

int Expr::index() const {
  if (op() != Op::Var) throw DomainError("Expr::index on a non-variable");
  return node_->ivalue;
}

int Expr::exponent() const {
  if (op() != Op::Pow) throw DomainError("Expr::exponent on a non-power");
  return node_->ivalue;
}

const Expr& Expr::lhs() const { return node_->a; }
const Expr& Expr::rhs() const { return node_->b; }

bool Expr::is_zero() const noexcept { return op() == Op::Const && value() == 0.0; }
bool Expr::is_one() const noexcept { return op() == Op::Const && value() == 1.0; }

int Expr::max_variable() const {
  switch (op()) {
    case Op::Const:
      return -1;
    case Op::Var:
      return node_->ivalue;
    default:
      break;
  }
  int m = node_->a.max_variable();
  if (is_binary(op())) m = std::max(m, node_->b.max_variable());
  return m;
}

std::size_t Expr::node_count() const {
  switch (op()) {
    case Op::Const:
    case Op::Var:
      return 1;
    default:
      break;
  }
  std::size_t c = 1 + node_->a.node_count();
  if (is_binary(op())) c += node_->b.node_count();
  return c;
}

double Expr::eval(std::span<const double> x) const {
  if (!node_) return 0.0;
  const Node& n = *node_;
  switch (n.op) {
    case Op::Const:
      return n.value;
    case Op::Var:
      if (static_cast<std::size_t>(n.ivalue) >= x.size()) throw DomainError("variable out of range");
      return x[static_cast<std::size_t>(n.ivalue)];
    case Op::Neg:
      return -n.a.eval(x);
    case Op::Add:
      return n.a.eval(x) + n.b.eval(x);
    case Op::Sub:
      return n.a.eval(x) - n.b.eval(x);
    case Op::Mul:
      return n.a.eval(x) * n.b.eval(x);
    case Op::Div:
      return checked_div(n.a.eval(x), n.b.eval(x));
    case Op::Pow:
      return checked_pow(n.a.eval(x), n.ivalue);
    case Op::Sin:
      return std::sin(n.a.eval(x));
    case Op::Cos:
      return std::cos(n.a.eval(x));
    case Op::Exp:
      return std::exp(n.a.eval(x));
    case Op::Tanh:
      return std::tanh(n.a.eval(x));
  }
  return 0.0;
}

Expr operator+(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) return Expr::constant(a.value() + b.value());
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  return Expr::make(Op::Add, a, b, 0.0, 0);
}

Expr operator-(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) return Expr::constant(a.value() - b.value());
  if (b.is_zero()) return a;
  if (a.is_zero()) return -b;
  return Expr::make(Op::Sub, a, b, 0.0, 0);
}

Expr operator*(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) return Expr::constant(a.value() * b.value());
  if (a.is_zero() || b.is_zero()) return Expr();
  if (a.is_one()) return b;
  if (b.is_one()) return a;
  return Expr::make(Op::Mul, a, b, 0.0, 0);
}

Expr operator/(const Expr& a, const Expr& b) {
  // A literal zero denominator stays in the tree so evaluation reports it.
  if (b.is_zero()) return Expr::make(Op::Div, a, b, 0.0, 0);
  if (a.is_constant() && b.is_constant()) return Expr::constant(a.value() / b.value());
  if (a.is_zero()) return Expr();
  if (b.is_one()) return a;
  return Expr::make(Op::Div, a, b, 0.0, 0);
}

Expr operator-(const Expr& a) {
  if (a.is_constant()) return Expr::constant(-a.value());
  if (a.op() == Op::Neg) return a.lhs();
  return Expr::make(Op::Neg, a, Expr(), 0.0, 0);
}

Expr pow(const Expr& base, int exponent) {
  if (exponent == 0) return Expr::constant(1.0);
  if (exponent == 1) return base;
  if (base.is_constant() && !(base.is_zero() && exponent < 0)) {
    return Expr::constant(std::pow(base.value(), exponent));
  }
  return Expr::make(Op::Pow, base, Expr(), 0.0, exponent);
}

Expr sin(const Expr& a) {
  if (a.is_constant()) return Expr::constant(std::sin(a.value()));
  return Expr::make(Op::Sin, a, Expr(), 0.0, 0);
}

Expr cos(const Expr& a) {
  if (a.is_constant()) return Expr::constant(std::cos(a.value()));
  return Expr::make(Op::Cos, a, Expr(), 0.0, 0);
}

Expr exp(const Expr& a) {
  if (a.is_constant()) return Expr::constant(std::exp(a.value()));
  return Expr::make(Op::Exp, a, Expr(), 0.0, 0);
}

Expr tanh(const Expr& a) {
  if (a.is_constant()) return Expr::constant(std::tanh(a.value()));
  return Expr::make(Op::Tanh, a, Expr(), 0.0, 0);
}

Expr Expr::derivative(int var) const {
  if (!node_) return Expr();
  const Node& n = *node_;
  switch (n.op) {
    case Op::Const:
      return Expr();
    case Op::Var:
      return Expr::constant(n.ivalue == var ? 1.0 : 0.0);
    case Op::Neg:
      return -n.a.derivative(var);
    case Op::Add:
      return n.a.derivative(var) + n.b.derivative(var);
    case Op::Sub:
      return n.a.derivative(var) - n.b.derivative(var);
    case Op::Mul:
      return n.a.derivative(var) * n.b + n.a * n.b.derivative(var);
    case Op::Div:
      return (n.a.derivative(var) * n.b - n.a * n.b.derivative(var)) / pow(n.b, 2);
    case Op::Pow:
      return (Expr::constant(n.ivalue) * pow(n.a, n.ivalue - 1)) * n.a.derivative(var);
    case Op::Sin:
      return cos(n.a) * n.a.derivative(var);
    case Op::Cos:
      return -sin(n.a) * n.a.derivative(var);
    case Op::Exp:
      return exp(n.a) * n.a.derivative(var);
    case Op::Tanh:
      return (Expr::constant(1.0) - pow(tanh(n.a), 2)) * n.a.derivative(var);
  }
  return Expr();
}

namespace {

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s(buf);
  if (v < 0.0 || (v == 0.0 && std::signbit(v))) return "(" + s + ")";
  return s;
}

const char* function_name(Op op) {
  switch (op) {
    case Op::Sin:
      return "sin";
    case Op::Cos:
      return "cos";
    case Op::Exp:
      return "exp";
    case Op::Tanh:
      return "tanh";
    default:
      return "";
  }
}

void print(const Expr& e, std::string& out);

void print_wrapped(const Expr& e, bool wrap, std::string& out) {
  if (wrap) out += '(';
  print(e, out);
  if (wrap) out += ')';
}

// Parentheses mirror the tree exactly so that parsing reproduces the same
// evaluation order.
void print(const Expr& e, std::string& out) {
  const Op op = e.op();
  switch (op) {
    case Op::Const:
      out += format_number(e.value());
      return;
    case Op::Var:
      out += 'x';
      out += std::to_string(e.index() + 1);
      return;
    case Op::Neg:
      out += '-';
      print_wrapped(e.lhs(), precedence(e.lhs().op()) < 4, out);
      return;
    case Op::Pow: {
      const Expr& base = e.lhs();
      const bool atom = precedence(base.op()) == 5 && !(base.is_constant() && base.value() < 0.0);
      print_wrapped(base, !atom, out);
      out += '^';
      if (e.exponent() < 0) {
        out += "(" + std::to_string(e.exponent()) + ")";
      } else {
        out += std::to_string(e.exponent());
      }
      return;
    }
    case Op::Sin:
    case Op::Cos:
    case Op::Exp:
    case Op::Tanh:
      out += function_name(op);
      out += '(';
      print(e.lhs(), out);
      out += ')';
      return;
    default:
      break;
  }
  const int p = precedence(op);
  print_wrapped(e.lhs(), precedence(e.lhs().op()) < p, out);
  switch (op) {
    case Op::Add:
      out += " + ";
      break;
    case Op::Sub:
      out += " - ";
      break;
    case Op::Mul:
      out += " * ";
      break;
    default:
      out += " / ";
      break;
  }
  print_wrapped(e.rhs(), precedence(e.rhs().op()) <= p, out);
}

}  // namespace

std::string Expr::to_string() const {
  std::string out;
  print(*this, out);
  return out;
}

Eigen::VectorXd evaluate(const FieldVector& field, std::span<const double> x) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(field.size()));
  for (std::size_t i = 0; i < field.size(); ++i) out(static_cast<Eigen::Index>(i)) = field[i].eval(x);
  return out;
}

Eigen::MatrixXd evaluate(const ExprMatrix& m, std::span<const double> x) {
  const auto rows = static_cast<Eigen::Index>(m.size());
  const auto cols = rows == 0 ? 0 : static_cast<Eigen::Index>(m[0].size());
  Eigen::MatrixXd out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      out(i, j) = m[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].eval(x);
    }
  }
  return out;
}

ExprMatrix jacobian(const FieldVector& field) {
  const int n = static_cast<int>(field.size());
  ExprMatrix out(field.size(), FieldVector(field.size()));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = field[static_cast<std::size_t>(i)].derivative(j);
  }
  return out;
}

FieldVector multiply(const ExprMatrix& m, const FieldVector& v) {
  FieldVector out(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i].size() != v.size()) throw DomainError("multiply: dimension mismatch");
    Expr acc;
    for (std::size_t j = 0; j < v.size(); ++j) acc = acc + m[i][j] * v[j];
    out[i] = acc;
  }
  return out;
}

FieldVector lie_bracket(const FieldVector& v, const FieldVector& w) {
  if (v.size() != w.size()) throw DomainError("lie_bracket: dimension mismatch");
  const FieldVector dw_v = multiply(jacobian(w), v);
  const FieldVector dv_w = multiply(jacobian(v), w);
  FieldVector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = dw_v[i] - dv_w[i];
  return out;
}

std::string to_string(const FieldVector& field) {
  std::string out = "[";
  for (std::size_t i = 0; i < field.size(); ++i) {
    if (i) out += ", ";
    out += field[i].to_string();
  }
  return out + "]";
}

bool VectorFieldSet::additive_affine() const {
  for (int i = 1; i <= d; ++i) {
    for (const auto& c : noise(i)) {
      if (!c.is_constant()) return false;
    }
  }
  for (const auto& c : drift()) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        if (!c.derivative(j).derivative(k).is_zero()) return false;
      }
    }
  }
  return true;
}

std::string VectorFieldSet::to_string() const {
  std::string out;
  for (std::size_t k = 0; k < fields.size(); ++k) {
    out += "V" + std::to_string(k) + " = " + expr::to_string(fields[k]);
    if (k < bounded_claimed.size() && bounded_claimed[k]) out += " bounded";
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

enum class Tok { Number, Ident, Symbol, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  double number = 0.0;
  int line = 1;
  int column = 1;
};

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) { advance(); }

  const Token& peek() const { return current_; }

  Token take() {
    Token t = current_;
    advance();
    return t;
  }

  bool accept(std::string_view symbol) {
    if (current_.kind == Tok::Symbol && current_.text == symbol) {
      advance();
      return true;
    }
    return false;
  }

  void expect(std::string_view symbol) {
    if (!accept(symbol)) fail("expected '" + std::string(symbol) + "'");
  }

  [[noreturn]] void fail(const std::string& what) const {
    const std::string found = current_.kind == Tok::End ? "end of input" : "'" + current_.text + "'";
    throw ParseError(what + ", found " + found, current_.line, current_.column);
  }

 private:
  void advance() {
    skip_space();
    current_ = Token{};
    current_.line = line_;
    current_.column = column_;
    if (pos_ >= text_.size()) return;
    const char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = text_.data() + pos_;
      char* end = nullptr;
      current_.number = std::strtod(begin, &end);
      const auto len = static_cast<std::size_t>(end - begin);
      if (len == 0) throw ParseError("malformed number", line_, column_);
      current_.kind = Tok::Number;
      current_.text = std::string(text_.substr(pos_, len));
      bump(len);
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t len = 0;
      while (pos_ + len < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_ + len])) || text_[pos_ + len] == '_')) {
        ++len;
      }
      current_.kind = Tok::Ident;
      current_.text = std::string(text_.substr(pos_, len));
      bump(len);
      return;
    }
    static constexpr std::string_view symbols = "+-*/^()[],=;";
    if (symbols.find(c) == std::string_view::npos) {
      throw ParseError(std::string("unexpected character '") + c + "'", line_, column_);
    }
    current_.kind = Tok::Symbol;
    current_.text = std::string(1, c);
    bump(1);
  }

  void skip_space() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') bump(1);
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        bump(1);
      } else {
        break;
      }
    }
  }

  void bump(std::size_t len) {
    for (std::size_t i = 0; i < len; ++i) {
      if (text_[pos_] == '\n') {
        ++line_;
        column_ = 1;
      } else {
        ++column_;
      }
      ++pos_;
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int column_ = 1;
  Token current_;
};

class ExprParser {
 public:
  ExprParser(Lexer& lex, int n) : lex_(lex), n_(n) {}

  Expr expression() {
    Expr e = term();
    for (;;) {
      if (lex_.accept("+")) {
        e = e + term();
      } else if (lex_.accept("-")) {
        e = e - term();
      } else {
        return e;
      }
    }
  }

 private:
  Expr term() {
    Expr e = unary();
    for (;;) {
      if (lex_.accept("*")) {
        e = e * unary();
      } else if (lex_.accept("/")) {
        e = e / unary();
      } else {
        return e;
      }
    }
  }

  Expr unary() {
    if (lex_.accept("-")) return -unary();
    if (lex_.accept("+")) return unary();
    return power();
  }

  Expr power() {
    Expr base = primary();
    if (!lex_.accept("^")) return base;
    return pow(base, integer_exponent());
  }

  int integer_exponent() {
    const bool paren = lex_.accept("(");
    int sign = 1;
    if (lex_.accept("-")) {
      sign = -1;
    } else {
      lex_.accept("+");
    }
    const Token& t = lex_.peek();
    if (t.kind != Tok::Number || t.text.find_first_not_of("0123456789") != std::string::npos) {
      lex_.fail("expected an integer exponent");
    }
    const int k = sign * std::stoi(lex_.take().text);
    if (paren) lex_.expect(")");
    return k;
  }

  Expr primary() {
    const Token& t = lex_.peek();
    if (t.kind == Tok::Number) return Expr::constant(lex_.take().number);
    if (t.kind == Tok::Symbol && t.text == "(") {
      lex_.take();
      Expr e = expression();
      lex_.expect(")");
      return e;
    }
    if (t.kind == Tok::Ident) {
      const Token id = lex_.take();
      if (id.text == "sin" || id.text == "cos" || id.text == "exp" || id.text == "tanh") {
        lex_.expect("(");
        Expr arg = expression();
        lex_.expect(")");
        if (id.text == "sin") return sin(arg);
        if (id.text == "cos") return cos(arg);
        if (id.text == "exp") return exp(arg);
        return tanh(arg);
      }
      if (id.text.size() >= 2 && id.text[0] == 'x' &&
          id.text.find_first_not_of("0123456789", 1) == std::string::npos) {
        const int k = std::stoi(id.text.substr(1));
        if (k < 1 || k > n_) {
          throw ParseError("unknown variable '" + id.text + "' (dimension " + std::to_string(n_) + ")",
                           id.line, id.column);
        }
        return Expr::variable(k - 1);
      }
      throw ParseError("unknown identifier '" + id.text + "'", id.line, id.column);
    }
    lex_.fail("expected an expression");
  }

  Lexer& lex_;
  int n_;
};

}  // namespace

Expr parse_expression(std::string_view text, int n) {
  Lexer lex(text);
  ExprParser parser(lex, n);
  Expr e = parser.expression();
  if (lex.peek().kind != Tok::End) lex.fail("unexpected trailing input");
  return e;
}

VectorFieldSet parse_field_set(std::string_view text, int n, int d) {
  if (n < 1 || d < 0) throw DomainError("parse_field_set: need n >= 1 and d >= 0");
  VectorFieldSet fs;
  fs.n = n;
  fs.d = d;
  fs.fields.assign(static_cast<std::size_t>(d + 1), FieldVector{});
  fs.bounded_claimed.assign(static_cast<std::size_t>(d + 1), false);
  std::vector<bool> seen(static_cast<std::size_t>(d + 1), false);

  Lexer lex(text);
  ExprParser parser(lex, n);
  while (lex.peek().kind != Tok::End) {
    if (lex.accept(";")) continue;
    const Token name = lex.peek();
    if (name.kind != Tok::Ident || name.text.size() < 2 || name.text[0] != 'V' ||
        name.text.find_first_not_of("0123456789", 1) != std::string::npos) {
      lex.fail("expected a field name V<k>");
    }
    lex.take();
    const int k = std::stoi(name.text.substr(1));
    if (k > d) {
      throw ParseError("field " + name.text + " exceeds noise dimension d = " + std::to_string(d),
                       name.line, name.column);
    }
    if (seen[static_cast<std::size_t>(k)]) {
      throw ParseError("field " + name.text + " defined twice", name.line, name.column);
    }
    lex.expect("=");
    lex.expect("[");
    FieldVector comps;
    comps.push_back(parser.expression());
    while (lex.accept(",")) comps.push_back(parser.expression());
    const Token close = lex.peek();
    lex.expect("]");
    if (static_cast<int>(comps.size()) != n) {
      throw ParseError("field " + name.text + " has " + std::to_string(comps.size()) +
                           " components, expected " + std::to_string(n),
                       close.line, close.column);
    }
    if (lex.peek().kind == Tok::Ident && lex.peek().text == "bounded") {
      lex.take();
      fs.bounded_claimed[static_cast<std::size_t>(k)] = true;
    }
    fs.fields[static_cast<std::size_t>(k)] = std::move(comps);
    seen[static_cast<std::size_t>(k)] = true;
  }
  for (int k = 0; k <= d; ++k) {
    if (!seen[static_cast<std::size_t>(k)]) {
      const Token& end = lex.peek();
      throw ParseError("missing field V" + std::to_string(k), end.line, end.column);
    }
  }
  return fs;
}

// ---------------------------------------------------------------------------
// Program

Program::Program(std::span<const Expr> outputs) : n_outputs_(outputs.size()) {
  for (const auto& e : outputs) {
    emit(e);
    ends_.push_back(code_.size());
  }
  // Stack depth by simulation.
  std::size_t depth = 0;
  for (const auto& in : code_) {
    if (in.op == Op::Const || in.op == Op::Var) {
      ++depth;
    } else if (is_binary(in.op)) {
      --depth;
    }
    max_depth_ = std::max(max_depth_, depth);
  }
}

void Program::emit(const Expr& e) {
  const Op op = e.op();
  if (op == Op::Const) {
    code_.push_back({op, 0, e.value()});
    return;
  }
  if (op == Op::Var) {
    code_.push_back({op, e.index(), 0.0});
    return;
  }
  emit(e.lhs());
  if (is_binary(op)) emit(e.rhs());
  code_.push_back({op, op == Op::Pow ? e.exponent() : 0, 0.0});
}

void Program::run(std::span<const double> x, std::span<double> out, std::vector<double>& stack) const {
  if (stack.size() < max_depth_ + 1) stack.resize(max_depth_ + 1);
  double* sp = stack.data();
  std::size_t out_index = 0;
  std::size_t next_end = ends_.empty() ? 0 : ends_[0];
  for (std::size_t pc = 0;; ++pc) {
    while (out_index < n_outputs_ && pc == next_end) {
      out[out_index] = *(sp - 1);
      --sp;
      ++out_index;
      next_end = out_index < n_outputs_ ? ends_[out_index] : 0;
    }
    if (pc >= code_.size()) break;
    const Instr& in = code_[pc];
    switch (in.op) {
      case Op::Const:
        *sp++ = in.value;
        break;
      case Op::Var:
        *sp++ = x[static_cast<std::size_t>(in.ivalue)];
        break;
      case Op::Neg:
        sp[-1] = -sp[-1];
        break;
      case Op::Add:
        sp[-2] = sp[-2] + sp[-1];
        --sp;
        break;
      case Op::Sub:
        sp[-2] = sp[-2] - sp[-1];
        --sp;
        break;
      case Op::Mul:
        sp[-2] = sp[-2] * sp[-1];
        --sp;
        break;
      case Op::Div:
        sp[-2] = checked_div(sp[-2], sp[-1]);
        --sp;
        break;
      case Op::Pow:
        sp[-1] = checked_pow(sp[-1], in.ivalue);
        break;
      case Op::Sin:
        sp[-1] = std::sin(sp[-1]);
        break;
      case Op::Cos:
        sp[-1] = std::cos(sp[-1]);
        break;
      case Op::Exp:
        sp[-1] = std::exp(sp[-1]);
        break;
      case Op::Tanh:
        sp[-1] = std::tanh(sp[-1]);
        break;
    }
  }
}

}  // namespace fbmhypo::expr
