#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pbc::ad {

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Op : std::uint8_t {
  kLeaf,   // variable or constant
  kAdd,    // a + b
  kSub,    // a - b
  kMul,    // a * b
  kNeg,    // -a
  kAddC,   // a + aux
  kMulC,   // a * aux
  kTanh,
  kRelu,
  kSquare,
  kSqrt,
  kExp,
  kLog,
  kRecip,
  kDot,    // sum_i pool[2i] * pool[2i+1]
  kDotC,   // sum_i pool[i] * cpool[i]
  kSum,    // sum_i pool[i]
  kMin,    // min over pool; gradient to first attaining argument
  kMax,    // max over pool; gradient to first attaining argument
};

class Tape;

// Lightweight handle into a tape. Copyable; owns nothing.
struct Value {
  Tape* tape = nullptr;
  std::int32_t idx = -1;
  bool valid() const { return tape != nullptr && idx >= 0; }
};

class Tape {
 public:
  Tape() = default;

  std::size_t size() const { return val_.size(); }

  void clear() {
    nodes_.clear();
    val_.clear();
    adj_.clear();
    pool_.clear();
    cpool_.clear();
  }

  void reserve(std::size_t nodes, std::size_t pool) {
    nodes_.reserve(nodes);
    val_.reserve(nodes);
    pool_.reserve(pool);
  }

  Value var(double v) { return push(Op::kLeaf, -1, -1, 0, 0, 0.0, v); }
  Value constant(double v) { return push(Op::kLeaf, -1, -1, 0, 0, 0.0, v); }

  std::vector<Value> vars(std::span<const double> xs) {
    std::vector<Value> out;
    out.reserve(xs.size());
    for (double x : xs) out.push_back(var(x));
    return out;
  }

  double value(Value v) const { return val_[static_cast<std::size_t>(v.idx)]; }
  double adjoint(Value v) const { return adj_[static_cast<std::size_t>(v.idx)]; }

  Value add(Value a, Value b) { return push(Op::kAdd, a.idx, b.idx, 0, 0, 0.0, val(a) + val(b)); }
  Value sub(Value a, Value b) { return push(Op::kSub, a.idx, b.idx, 0, 0, 0.0, val(a) - val(b)); }
  Value mul(Value a, Value b) { return push(Op::kMul, a.idx, b.idx, 0, 0, 0.0, val(a) * val(b)); }
  Value neg(Value a) { return push(Op::kNeg, a.idx, -1, 0, 0, 0.0, -val(a)); }
  Value add_const(Value a, double c) { return push(Op::kAddC, a.idx, -1, 0, 0, c, val(a) + c); }
  Value mul_const(Value a, double c) { return push(Op::kMulC, a.idx, -1, 0, 0, c, val(a) * c); }
  Value tanh(Value a) { return push(Op::kTanh, a.idx, -1, 0, 0, 0.0, std::tanh(val(a))); }
  Value relu(Value a) { return push(Op::kRelu, a.idx, -1, 0, 0, 0.0, val(a) > 0.0 ? val(a) : 0.0); }
  Value square(Value a) { return push(Op::kSquare, a.idx, -1, 0, 0, 0.0, val(a) * val(a)); }
  Value sqrt(Value a) { return push(Op::kSqrt, a.idx, -1, 0, 0, 0.0, std::sqrt(val(a))); }
  Value exp(Value a) { return push(Op::kExp, a.idx, -1, 0, 0, 0.0, std::exp(val(a))); }
  Value log(Value a) { return push(Op::kLog, a.idx, -1, 0, 0, 0.0, std::log(val(a))); }
  Value recip(Value a) { return push(Op::kRecip, a.idx, -1, 0, 0, 0.0, 1.0 / val(a)); }

  Value dot(std::span<const Value> a, std::span<const Value> b) {
    assert(a.size() == b.size());
    const auto beg = static_cast<std::int32_t>(pool_.size());
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      pool_.push_back(a[i].idx);
      pool_.push_back(b[i].idx);
      s += val(a[i]) * val(b[i]);
    }
    return push(Op::kDot, -1, -1, beg, static_cast<std::int32_t>(a.size()), 0.0, s);
  }

  Value dot_const(std::span<const Value> a, std::span<const double> c) {
    assert(a.size() == c.size());
    const auto beg = static_cast<std::int32_t>(pool_.size());
    const auto cbeg = static_cast<std::int32_t>(cpool_.size());
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      pool_.push_back(a[i].idx);
      cpool_.push_back(c[i]);
      s += val(a[i]) * c[i];
    }
    Value v = push(Op::kDotC, cbeg, -1, beg, static_cast<std::int32_t>(a.size()), 0.0, s);
    return v;
  }

  Value sum(std::span<const Value> a) {
    const auto beg = static_cast<std::int32_t>(pool_.size());
    double s = 0.0;
    for (const Value& x : a) {
      pool_.push_back(x.idx);
      s += val(x);
    }
    return push(Op::kSum, -1, -1, beg, static_cast<std::int32_t>(a.size()), 0.0, s);
  }

  Value min(std::span<const Value> a) { return extremum(Op::kMin, a); }
  Value max(std::span<const Value> a) { return extremum(Op::kMax, a); }

  // Throws NumericalError if any forward value is not finite.
  void check_finite() const {
    for (std::size_t i = 0; i < val_.size(); ++i) {
      if (!std::isfinite(val_[i])) {
        throw NumericalError("non-finite forward value at tape node " + std::to_string(i));
      }
    }
  }

  // Reverse sweep seeding d f / d f = 1 at `f`. Adjoints of all nodes are
  // available through adjoint() afterwards.
  void backward(Value f) {
    adj_.assign(val_.size(), 0.0);
    adj_[static_cast<std::size_t>(f.idx)] = 1.0;
    for (std::int32_t i = static_cast<std::int32_t>(nodes_.size()) - 1; i >= 0; --i) {
      const Node& n = nodes_[static_cast<std::size_t>(i)];
      const double g = adj_[static_cast<std::size_t>(i)];
      if (g == 0.0) continue;
      switch (n.op) {
        case Op::kLeaf:
          break;
        case Op::kAdd:
          adj_[n.a] += g;
          adj_[n.b] += g;
          break;
        case Op::kSub:
          adj_[n.a] += g;
          adj_[n.b] -= g;
          break;
        case Op::kMul:
          adj_[n.a] += g * val_[n.b];
          adj_[n.b] += g * val_[n.a];
          break;
        case Op::kNeg:
          adj_[n.a] -= g;
          break;
        case Op::kAddC:
          adj_[n.a] += g;
          break;
        case Op::kMulC:
          adj_[n.a] += g * n.aux;
          break;
        case Op::kTanh: {
          const double y = val_[static_cast<std::size_t>(i)];
          adj_[n.a] += g * (1.0 - y * y);
          break;
        }
        case Op::kRelu:
          if (val_[n.a] > 0.0) adj_[n.a] += g;
          break;
        case Op::kSquare:
          adj_[n.a] += g * 2.0 * val_[n.a];
          break;
        case Op::kSqrt:
          adj_[n.a] += g * 0.5 / val_[static_cast<std::size_t>(i)];
          break;
        case Op::kExp:
          adj_[n.a] += g * val_[static_cast<std::size_t>(i)];
          break;
        case Op::kLog:
          adj_[n.a] += g / val_[n.a];
          break;
        case Op::kRecip: {
          const double y = val_[static_cast<std::size_t>(i)];
          adj_[n.a] -= g * y * y;
          break;
        }
        case Op::kDot:
          for (std::int32_t k = 0; k < n.pcnt; ++k) {
            const std::int32_t ia = pool_[static_cast<std::size_t>(n.pbeg + 2 * k)];
            const std::int32_t ib = pool_[static_cast<std::size_t>(n.pbeg + 2 * k + 1)];
            adj_[ia] += g * val_[ib];
            adj_[ib] += g * val_[ia];
          }
          break;
        case Op::kDotC:
          for (std::int32_t k = 0; k < n.pcnt; ++k) {
            adj_[pool_[static_cast<std::size_t>(n.pbeg + k)]] +=
                g * cpool_[static_cast<std::size_t>(n.a + k)];
          }
          break;
        case Op::kSum:
          for (std::int32_t k = 0; k < n.pcnt; ++k) {
            adj_[pool_[static_cast<std::size_t>(n.pbeg + k)]] += g;
          }
          break;
        case Op::kMin:
        case Op::kMax:
          // aux stores the index (within the pool slice) of the first
          // attaining argument, fixed at forward time.
          adj_[pool_[static_cast<std::size_t>(n.pbeg + static_cast<std::int32_t>(n.aux))]] += g;
          break;
      }
    }
  }

 private:
  struct Node {
    Op op;
    std::int32_t a = -1;  // first parent (or cpool offset for kDotC)
    std::int32_t b = -1;  // second parent
    std::int32_t pbeg = 0;
    std::int32_t pcnt = 0;
    double aux = 0.0;
  };

  double val(Value v) const { return val_[static_cast<std::size_t>(v.idx)]; }

  Value push(Op op, std::int32_t a, std::int32_t b, std::int32_t pbeg, std::int32_t pcnt,
             double aux, double v) {
    nodes_.push_back(Node{op, a, b, pbeg, pcnt, aux});
    val_.push_back(v);
    return Value{this, static_cast<std::int32_t>(nodes_.size() - 1)};
  }

  Value extremum(Op op, std::span<const Value> a) {
    assert(!a.empty());
    const auto beg = static_cast<std::int32_t>(pool_.size());
    double best = val(a[0]);
    std::int32_t best_k = 0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      pool_.push_back(a[k].idx);
      const double v = val(a[k]);
      const bool better = (op == Op::kMin) ? (v < best) : (v > best);
      if (better) {
        best = v;
        best_k = static_cast<std::int32_t>(k);
      }
    }
    return push(op, -1, -1, beg, static_cast<std::int32_t>(a.size()),
                static_cast<double>(best_k), best);
  }

  std::vector<Node> nodes_;
  std::vector<double> val_;
  std::vector<double> adj_;
  std::vector<std::int32_t> pool_;
  std::vector<double> cpool_;
};

inline Value operator+(Value a, Value b) { return a.tape->add(a, b); }
inline Value operator-(Value a, Value b) { return a.tape->sub(a, b); }
inline Value operator*(Value a, Value b) { return a.tape->mul(a, b); }
inline Value operator/(Value a, Value b) { return a.tape->mul(a, b.tape->recip(b)); }
inline Value operator-(Value a) { return a.tape->neg(a); }
inline Value operator+(Value a, double c) { return a.tape->add_const(a, c); }
inline Value operator+(double c, Value a) { return a.tape->add_const(a, c); }
inline Value operator-(Value a, double c) { return a.tape->add_const(a, -c); }
inline Value operator-(double c, Value a) { return a.tape->add_const(a.tape->neg(a), c); }
inline Value operator*(Value a, double c) { return a.tape->mul_const(a, c); }
inline Value operator*(double c, Value a) { return a.tape->mul_const(a, c); }
inline Value operator/(Value a, double c) { return a.tape->mul_const(a, 1.0 / c); }
inline Value operator/(double c, Value a) { return a.tape->mul_const(a.tape->recip(a), c); }
inline Value& operator+=(Value& a, Value b) { a = a + b; return a; }
inline Value& operator-=(Value& a, Value b) { a = a - b; return a; }
inline Value& operator*=(Value& a, Value b) { a = a * b; return a; }

inline Value tanh(Value a) { return a.tape->tanh(a); }
inline Value relu(Value a) { return a.tape->relu(a); }
inline Value square(Value a) { return a.tape->square(a); }
inline Value sqrt(Value a) { return a.tape->sqrt(a); }
inline Value exp(Value a) { return a.tape->exp(a); }
inline Value log(Value a) { return a.tape->log(a); }
inline Value recip(Value a) { return a.tape->recip(a); }
inline Value vmin(std::span<const Value> a) { return a[0].tape->min(a); }
inline Value vmax(std::span<const Value> a) { return a[0].tape->max(a); }
inline Value vmin(Value a, Value b) {
  const Value xs[2] = {a, b};
  return a.tape->min(std::span<const Value>(xs, 2));
}
inline Value vmax(Value a, Value b) {
  const Value xs[2] = {a, b};
  return a.tape->max(std::span<const Value>(xs, 2));
}
inline Value dot(std::span<const Value> a, std::span<const Value> b) { return a[0].tape->dot(a, b); }
inline Value dot(std::span<const Value> a, std::span<const double> c) {
  return a[0].tape->dot_const(a, c);
}

// Plain-double counterparts so numeric code can be written once and
// instantiated with either scalar type.
inline double relu(double a) { return a > 0.0 ? a : 0.0; }
inline double square(double a) { return a * a; }
inline double recip(double a) { return 1.0 / a; }
inline double vmin(double a, double b) { return a < b ? a : b; }
inline double vmax(double a, double b) { return a > b ? a : b; }
inline double vmin(std::span<const double> a) {
  double m = a[0];
  for (double v : a) m = v < m ? v : m;
  return m;
}
inline double vmax(std::span<const double> a) {
  double m = a[0];
  for (double v : a) m = v > m ? v : m;
  return m;
}
inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Forward value of a scalar, for branching and pivot selection.
inline double value_of(double x) { return x; }
inline double value_of(Value x) { return x.tape->value(x); }

// A constant with the same scalar type as `like`.
inline double scalar_like(double /*like*/, double v) { return v; }
inline Value scalar_like(Value like, double v) { return like.tape->constant(v); }

// Gradient of a scalar program f(tape, x_values) -> Value at the point x.
template <class F>
std::vector<double> grad(F&& f, std::span<const double> x) {
  Tape tape;
  std::vector<Value> xs = tape.vars(x);
  Value y = f(tape, std::span<const Value>(xs));
  tape.check_finite();
  tape.backward(y);
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) g[i] = tape.adjoint(xs[i]);
  return g;
}

template <class F>
double eval(F&& f, std::span<const double> x) {
  Tape tape;
  std::vector<Value> xs = tape.vars(x);
  Value y = f(tape, std::span<const Value>(xs));
  return tape.value(y);
}

// Max relative discrepancy between reverse-mode and central finite
// differences with step h, taken over coordinates.
template <class F>
double grad_check(F&& f, std::span<const double> x, double h) {
  const std::vector<double> g = grad(f, x);
  std::vector<double> xp(x.begin(), x.end());
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double x0 = xp[i];
    xp[i] = x0 + h;
    const double fp = eval(f, xp);
    xp[i] = x0 - h;
    const double fm = eval(f, xp);
    xp[i] = x0;
    const double fd = (fp - fm) / (2.0 * h);
    const double denom = std::max({1.0, std::abs(fd), std::abs(g[i])});
    worst = std::max(worst, std::abs(g[i] - fd) / denom);
  }
  return worst;
}

}  // namespace pbc::ad
