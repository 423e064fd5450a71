#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "momprop/expr.hpp"
#include "momprop/value_ops.hpp"

namespace momprop {

/// Flat postorder program compiled from an Expression, for tight repeated
/// evaluation (the Monte Carlo inner loop). Every operation goes through the
/// same ev_* primitives as the tree walker, so the two paths produce
/// bit-identical values and identical domain errors.
class CompiledExpr {
public:
  explicit CompiledExpr(const Expression& f) : arity_(f.arity()) {
    std::size_t depth = 0;
    flatten(f.root(), depth);
  }

  int arity() const noexcept { return arity_; }
  std::size_t stack_depth() const noexcept { return max_depth_; }

  /// Evaluate at a point. `stack` must hold at least stack_depth() doubles.
  double eval(std::span<const double> point, double* stack) const {
    double* sp = stack;
    for (const Instr& ins : code_) {
      switch (ins.op) {
        case Op::push_const: *sp++ = ins.imm; break;
        case Op::push_var: *sp++ = point[static_cast<std::size_t>(ins.var)]; break;
        case Op::negate: sp[-1] = ev_neg(sp[-1]); break;
        case Op::sin_: sp[-1] = ev_sin(sp[-1]); break;
        case Op::cos_: sp[-1] = ev_cos(sp[-1]); break;
        case Op::exp_: sp[-1] = ev_exp(sp[-1]); break;
        case Op::log_: sp[-1] = ev_log(sp[-1]); break;
        case Op::sqrt_: sp[-1] = ev_sqrt(sp[-1]); break;
        case Op::tanh_: sp[-1] = ev_tanh(sp[-1]); break;
        case Op::add: sp[-2] = ev_add(sp[-2], sp[-1]); --sp; break;
        case Op::sub: sp[-2] = ev_sub(sp[-2], sp[-1]); --sp; break;
        case Op::mul: sp[-2] = ev_mul(sp[-2], sp[-1]); --sp; break;
        case Op::div: sp[-2] = ev_div(sp[-2], sp[-1]); --sp; break;
        case Op::pow_: sp[-2] = ev_pow(sp[-2], sp[-1]); --sp; break;
      }
    }
    return sp[-1];
  }

private:
  enum class Op : std::uint8_t {
    push_const,
    push_var,
    negate,
    sin_,
    cos_,
    exp_,
    log_,
    sqrt_,
    tanh_,
    add,
    sub,
    mul,
    div,
    pow_
  };

  struct Instr {
    Op op;
    std::int32_t var = 0;
    double imm = 0.0;
  };

  void flatten(const ExprNode& n, std::size_t& depth) {
    std::visit(
        detail::Overloaded{
            [&](const ExprNode::Constant& c) {
              code_.push_back({Op::push_const, 0, c.value});
              bump(++depth);
            },
            [&](const ExprNode::Variable& v) {
              code_.push_back({Op::push_var, v.index - 1, 0.0});
              bump(++depth);
            },
            [&](const ExprNode::Unary& u) {
              flatten(*u.arg, depth);
              switch (u.op) {
                case UnaryOp::negate: code_.push_back({Op::negate}); break;
                case UnaryOp::sin: code_.push_back({Op::sin_}); break;
                case UnaryOp::cos: code_.push_back({Op::cos_}); break;
                case UnaryOp::exp: code_.push_back({Op::exp_}); break;
                case UnaryOp::log: code_.push_back({Op::log_}); break;
                case UnaryOp::sqrt: code_.push_back({Op::sqrt_}); break;
                case UnaryOp::tanh: code_.push_back({Op::tanh_}); break;
              }
            },
            [&](const ExprNode::Binary& b) {
              flatten(*b.lhs, depth);
              flatten(*b.rhs, depth);
              switch (b.op) {
                case BinaryOp::add: code_.push_back({Op::add}); break;
                case BinaryOp::sub: code_.push_back({Op::sub}); break;
                case BinaryOp::mul: code_.push_back({Op::mul}); break;
                case BinaryOp::div: code_.push_back({Op::div}); break;
                case BinaryOp::pow: code_.push_back({Op::pow_}); break;
              }
              --depth;
            },
        },
        n.node);
  }

  void bump(std::size_t depth) { max_depth_ = std::max(max_depth_, depth); }

  std::vector<Instr> code_;
  int arity_ = 0;
  std::size_t max_depth_ = 0;
};

}  // namespace momprop
