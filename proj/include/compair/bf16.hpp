#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <memory>
#include <string>
#include <vector>

namespace compair {

/// Arithmetic opcode shared by the Curry ALU, the ISA and the kernels.
/// Add..Div encode in 2 bits inside a PathStep. Max is a row-level
/// instruction op realised in hardware as a compare-and-select micro-op
/// pair; it never appears in wire encodings.
enum class AluOp : uint8_t { Add = 0, Sub = 1, Mul = 2, Div = 3, Max = 4 };

const char* alu_op_name(AluOp op);

/// BF16 scalar: 1 sign, 8 exponent, 7 mantissa bits. All 2^16 patterns are
/// representable; NaN/inf flow through arithmetic with IEEE semantics.
struct Bf16 {
  uint16_t bits = 0;

  constexpr Bf16() = default;
  constexpr explicit Bf16(uint16_t raw) : bits(raw) {}

  static Bf16 from_bits(uint16_t raw) { return Bf16(raw); }

  /// Round-to-nearest-even conversion from binary32.
  static Bf16 from_float(float f) {
    uint32_t u;
    std::memcpy(&u, &f, sizeof(u));
    if ((u & 0x7FFFFFFFu) > 0x7F800000u) {
      // NaN: keep a quiet payload.
      return Bf16(static_cast<uint16_t>((u >> 16) | 0x0040u));
    }
    uint32_t lsb = (u >> 16) & 1u;
    u += 0x7FFFu + lsb;
    return Bf16(static_cast<uint16_t>(u >> 16));
  }

  static Bf16 from_double(double d) { return from_float(static_cast<float>(d)); }

  float to_float() const {
    uint32_t u = static_cast<uint32_t>(bits) << 16;
    float f;
    std::memcpy(&f, &u, sizeof(f));
    return f;
  }
  double to_double() const { return static_cast<double>(to_float()); }

  bool is_nan() const {
    return ((bits & 0x7F80u) == 0x7F80u) && ((bits & 0x007Fu) != 0);
  }

  bool operator==(const Bf16& o) const { return bits == o.bits; }
  bool operator!=(const Bf16& o) const { return bits != o.bits; }
};

/// a <op> b computed in binary32, rounded to nearest-even back to BF16.
Bf16 bf16_binop(AluOp op, Bf16 a, Bf16 b);

/// Distance in units-in-last-place between two finite BF16 values.
int bf16_ulp_distance(Bf16 a, Bf16 b);

// ---------------------------------------------------------------------------
// Binary64 expression oracle. Used by tests and the kernel validators as the
// independent reference path; it never touches BF16.

class Expr;
using ExprPtr = std::shared_ptr<const Expr>;

class Expr {
 public:
  enum class Kind { Const, Var, Binop, Exp, Sqrt };

  static ExprPtr constant(double v);
  static ExprPtr var(int index);
  static ExprPtr binop(AluOp op, ExprPtr lhs, ExprPtr rhs);
  static ExprPtr exp(ExprPtr x);
  static ExprPtr sqrt(ExprPtr x);

  double eval(const std::vector<double>& inputs) const;

 private:
  Kind kind_;
  double value_ = 0.0;
  int var_index_ = 0;
  AluOp op_ = AluOp::Add;
  ExprPtr lhs_, rhs_;
};

double oracle_eval(const ExprPtr& e, const std::vector<double>& inputs);

}  // namespace compair
