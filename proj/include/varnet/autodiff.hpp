#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "varnet/errors.hpp"

namespace varnet {

class Tape;

/// A scalar tracked on a tape, or a literal constant when `node < 0`.
/// Literals participate in arithmetic with full constant folding, which keeps
/// structurally-zero jet components free of tape nodes.
struct Var {
    Tape* tape = nullptr;
    std::int32_t node = -1;
    double value = 0.0;

    bool is_literal() const { return node < 0; }
};

/// A literal constant (not recorded on any tape; gradient contributions
/// through it are identically zero).
inline Var literal(double v) { return Var{nullptr, -1, v}; }

/// Append-only record of a computation. Each node stores its parents and the
/// exact local partial derivatives; replaying them in reverse yields exact
/// chain-rule gradients. Parent indices always precede the node's own index.
class Tape {
  public:
    Tape() { nodes_.reserve(1 << 14); }

    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Records a leaf (independent variable).
    Var var(double value) {
        const std::int32_t i = next();
        nodes_.push_back(Node{i, i, 0.0, 0.0});
        return Var{this, i, value};
    }

    std::int64_t size() const { return static_cast<std::int64_t>(nodes_.size()); }

    /// Discards all nodes but keeps allocated capacity.
    void reset() { nodes_.clear(); }

    Var unary(std::int32_t parent, double value, double partial) {
        const std::int32_t i = next();
        nodes_.push_back(Node{parent, i, partial, 0.0});
        return Var{this, i, value};
    }

    Var binary(std::int32_t p0, std::int32_t p1, double value, double d0, double d1) {
        const std::int32_t i = next();
        nodes_.push_back(Node{p0, p1, d0, d1});
        return Var{this, i, value};
    }

    /// Reverse sweep: exact gradient of `loss` with respect to `targets`.
    /// Targets not reached by the loss get 0. A literal loss yields all zeros.
    std::vector<double> grad(const Var& loss, std::span<const Var> targets) const;

  private:
    struct Node {
        std::int32_t p0, p1;
        double d0, d1;
    };

    std::int32_t next() const { return static_cast<std::int32_t>(nodes_.size()); }

    std::vector<Node> nodes_;
    mutable std::vector<double> adjoint_;
};

/// Gradient through the loss's own tape; see Tape::grad.
std::vector<double> grad(const Var& loss, std::span<const Var> targets);

namespace detail {

inline Tape* require_same_tape(const Var& a, const Var& b) {
    if (a.tape != b.tape) throw TapeMismatch();
    return a.tape;
}

inline double sigmoid_value(double u) {
    if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
    const double e = std::exp(u);
    return e / (1.0 + e);
}

}  // namespace detail

/// k*x + c in one node; folds to a literal (or to x itself) when possible.
inline Var affine(const Var& x, double k, double c) {
    if (x.is_literal()) return literal(k * x.value + c);
    if (k == 0.0) return literal(c);
    if (k == 1.0 && c == 0.0) return x;
    return x.tape->unary(x.node, k * x.value + c, k);
}

inline Var operator+(const Var& a, const Var& b) {
    if (a.is_literal()) return affine(b, 1.0, a.value);
    if (b.is_literal()) return affine(a, 1.0, b.value);
    Tape* t = detail::require_same_tape(a, b);
    return t->binary(a.node, b.node, a.value + b.value, 1.0, 1.0);
}

inline Var operator-(const Var& a, const Var& b) {
    if (b.is_literal()) return affine(a, 1.0, -b.value);
    if (a.is_literal()) return affine(b, -1.0, a.value);
    Tape* t = detail::require_same_tape(a, b);
    return t->binary(a.node, b.node, a.value - b.value, 1.0, -1.0);
}

inline Var operator-(const Var& a) { return affine(a, -1.0, 0.0); }

inline Var operator*(const Var& a, const Var& b) {
    if (a.is_literal()) return affine(b, a.value, 0.0);
    if (b.is_literal()) return affine(a, b.value, 0.0);
    Tape* t = detail::require_same_tape(a, b);
    return t->binary(a.node, b.node, a.value * b.value, b.value, a.value);
}

inline Var operator/(const Var& a, const Var& b) {
    if (b.value == 0.0) throw DivisionByZero();
    if (b.is_literal()) return affine(a, 1.0 / b.value, 0.0);
    const double inv = 1.0 / b.value;
    const double q = a.value * inv;
    if (a.is_literal()) return b.tape->unary(b.node, q, -q * inv);
    Tape* t = detail::require_same_tape(a, b);
    return t->binary(a.node, b.node, q, inv, -q * inv);
}

inline Var operator+(const Var& a, double c) { return affine(a, 1.0, c); }
inline Var operator+(double c, const Var& a) { return affine(a, 1.0, c); }
inline Var operator-(const Var& a, double c) { return affine(a, 1.0, -c); }
inline Var operator-(double c, const Var& a) { return affine(a, -1.0, c); }
inline Var operator*(const Var& a, double c) { return affine(a, c, 0.0); }
inline Var operator*(double c, const Var& a) { return affine(a, c, 0.0); }
inline Var operator/(const Var& a, double c) {
    if (c == 0.0) throw DivisionByZero();
    return affine(a, 1.0 / c, 0.0);
}
inline Var operator/(double c, const Var& a) { return literal(c) / a; }

inline Var exp(const Var& x) {
    const double e = std::exp(x.value);
    if (x.is_literal()) return literal(e);
    return x.tape->unary(x.node, e, e);
}

inline Var log(const Var& x) {
    if (x.value < 0.0) throw DomainError("log of negative value");
    if (x.is_literal()) return literal(std::log(x.value));
    return x.tape->unary(x.node, std::log(x.value), 1.0 / x.value);
}

inline Var sin(const Var& x) {
    if (x.is_literal()) return literal(std::sin(x.value));
    return x.tape->unary(x.node, std::sin(x.value), std::cos(x.value));
}

inline Var cos(const Var& x) {
    if (x.is_literal()) return literal(std::cos(x.value));
    return x.tape->unary(x.node, std::cos(x.value), -std::sin(x.value));
}

inline Var tanh(const Var& x) {
    const double t = std::tanh(x.value);
    if (x.is_literal()) return literal(t);
    return x.tape->unary(x.node, t, 1.0 - t * t);
}

inline Var sigmoid(const Var& x) {
    const double s = detail::sigmoid_value(x.value);
    if (x.is_literal()) return literal(s);
    return x.tape->unary(x.node, s, s * (1.0 - s));
}

inline Var sqrt(const Var& x) {
    if (x.value < 0.0) throw DomainError("sqrt of negative value");
    const double r = std::sqrt(x.value);
    if (x.is_literal()) return literal(r);
    return x.tape->unary(x.node, r, 0.5 / r);
}

inline Var abs(const Var& x) {
    const double s = x.value > 0.0 ? 1.0 : (x.value < 0.0 ? -1.0 : 0.0);
    if (x.is_literal()) return literal(std::abs(x.value));
    return x.tape->unary(x.node, std::abs(x.value), s);
}

inline Var relu(const Var& x) {
    const double s = x.value > 0.0 ? 1.0 : 0.0;
    if (x.is_literal()) return literal(x.value > 0.0 ? x.value : 0.0);
    return x.tape->unary(x.node, x.value > 0.0 ? x.value : 0.0, s);
}

/// x^p with a scalar exponent.
inline Var pow(const Var& x, double p) {
    if (x.value < 0.0 && p != std::floor(p)) {
        throw DomainError("pow of negative base with non-integer exponent");
    }
    const double v = std::pow(x.value, p);
    if (x.is_literal()) return literal(v);
    return x.tape->unary(x.node, v, p * std::pow(x.value, p - 1.0));
}

}  // namespace varnet
