#include "compair/bf16.hpp"

#include <algorithm>
#include <stdexcept>

namespace compair {

const char* alu_op_name(AluOp op) {
  switch (op) {
    case AluOp::Add: return "+=";
    case AluOp::Sub: return "-=";
    case AluOp::Mul: return "*=";
    case AluOp::Div: return "/=";
    case AluOp::Max: return "max";
  }
  return "?";
}

Bf16 bf16_binop(AluOp op, Bf16 a, Bf16 b) {
  float x = a.to_float();
  float y = b.to_float();
  float r = 0.0f;
  switch (op) {
    case AluOp::Add: r = x + y; break;
    case AluOp::Sub: r = x - y; break;
    case AluOp::Mul: r = x * y; break;
    case AluOp::Div: r = x / y; break;
    case AluOp::Max:
      if (std::isnan(x)) return b;
      if (std::isnan(y)) return a;
      return x >= y ? a : b;
  }
  return Bf16::from_float(r);
}

// Map the sign-magnitude bit pattern onto a monotone integer line so ulp
// distance is a plain subtraction.
static int32_t bf16_ordinal(Bf16 v) {
  int32_t s = v.bits;
  if (s & 0x8000) return 0x8000 - (s & 0x7FFF) - 1;
  return 0x8000 + (s & 0x7FFF);
}

int bf16_ulp_distance(Bf16 a, Bf16 b) {
  return std::abs(bf16_ordinal(a) - bf16_ordinal(b));
}

ExprPtr Expr::constant(double v) {
  auto e = std::make_shared<Expr>();
  e->kind_ = Kind::Const;
  e->value_ = v;
  return e;
}

ExprPtr Expr::var(int index) {
  auto e = std::make_shared<Expr>();
  e->kind_ = Kind::Var;
  e->var_index_ = index;
  return e;
}

ExprPtr Expr::binop(AluOp op, ExprPtr lhs, ExprPtr rhs) {
  auto e = std::make_shared<Expr>();
  e->kind_ = Kind::Binop;
  e->op_ = op;
  e->lhs_ = std::move(lhs);
  e->rhs_ = std::move(rhs);
  return e;
}

ExprPtr Expr::exp(ExprPtr x) {
  auto e = std::make_shared<Expr>();
  e->kind_ = Kind::Exp;
  e->lhs_ = std::move(x);
  return e;
}

ExprPtr Expr::sqrt(ExprPtr x) {
  auto e = std::make_shared<Expr>();
  e->kind_ = Kind::Sqrt;
  e->lhs_ = std::move(x);
  return e;
}

double Expr::eval(const std::vector<double>& inputs) const {
  switch (kind_) {
    case Kind::Const: return value_;
    case Kind::Var:
      if (var_index_ < 0 || static_cast<size_t>(var_index_) >= inputs.size())
        throw std::out_of_range("expression variable index out of range");
      return inputs[static_cast<size_t>(var_index_)];
    case Kind::Binop: {
      double l = lhs_->eval(inputs);
      double r = rhs_->eval(inputs);
      switch (op_) {
        case AluOp::Add: return l + r;
        case AluOp::Sub: return l - r;
        case AluOp::Mul: return l * r;
        case AluOp::Div: return l / r;  // div by zero -> inf per IEEE
        case AluOp::Max: return std::max(l, r);
      }
      return 0.0;
    }
    case Kind::Exp: return std::exp(lhs_->eval(inputs));
    case Kind::Sqrt: return std::sqrt(lhs_->eval(inputs));
  }
  return 0.0;
}

double oracle_eval(const ExprPtr& e, const std::vector<double>& inputs) {
  return e->eval(inputs);
}

}  // namespace compair
