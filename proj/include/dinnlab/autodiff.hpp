#pragma once

// Scalar automatic differentiation.
//
// Reverse mode: a Tape records primitive operations on Var handles; a single
// backward sweep produces adjoints for every recorded node.
//
// Forward mode: Dual<T> carries a value and a tangent with respect to one
// input. With T = Var the tangent is itself a tape value, so a loss built
// from tangents can be back-propagated (forward-over-reverse).

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace dinnlab::ad {

class Tape;

class Var {
public:
    Var() = default;
    Var(double constant) : value_(constant) {} // NOLINT(google-explicit-constructor)

    double value() const noexcept { return value_; }
    std::int32_t index() const noexcept { return index_; }
    Tape* tape() const noexcept { return tape_; }
    bool is_constant() const noexcept { return index_ < 0; }

private:
    friend class Tape;
    Var(Tape* tape, std::int32_t index, double value)
        : tape_(tape), index_(index), value_(value) {}

    Tape* tape_ = nullptr;
    std::int32_t index_ = -1;
    double value_ = 0.0;
};

class Tape {
public:
    struct Node {
        std::int32_t lhs;
        std::int32_t rhs;
        double d_lhs;
        double d_rhs;
    };

    // Registers an independent leaf.
    Var variable(double value);

    // Records value = f(a, b) with local partials; constant operands are dropped.
    Var record(double value, const Var& a, double d_a, const Var& b, double d_b);
    Var record(double value, const Var& a, double d_a);

    // Reverse sweep from `output`; returns adjoints indexed by node.
    std::vector<double> adjoints(const Var& output) const;

    // Reverse sweep seeded with explicit adjoints for several outputs.
    std::vector<double> adjoints(std::span<const Var> outputs, std::span<const double> seeds) const;

    std::size_t size() const noexcept { return nodes_.size(); }
    void clear() noexcept { nodes_.clear(); }
    void reserve(std::size_t n) { nodes_.reserve(n); }

private:
    void sweep(std::vector<double>& adj) const;

    std::vector<Node> nodes_;
};

// Gradient of `output` with respect to each leaf, in the order given.
// A leaf that never feeds `output` gets exactly 0.
std::vector<double> gradient(const Var& output, std::span<const Var> leaves);

namespace detail {
inline Tape* pick(const Var& a, const Var& b) { return a.tape() ? a.tape() : b.tape(); }
} // namespace detail

inline Var operator+(const Var& a, const Var& b) {
    Tape* t = detail::pick(a, b);
    if (!t) return Var(a.value() + b.value());
    return t->record(a.value() + b.value(), a, 1.0, b, 1.0);
}
inline Var operator-(const Var& a, const Var& b) {
    Tape* t = detail::pick(a, b);
    if (!t) return Var(a.value() - b.value());
    return t->record(a.value() - b.value(), a, 1.0, b, -1.0);
}
inline Var operator*(const Var& a, const Var& b) {
    Tape* t = detail::pick(a, b);
    if (!t) return Var(a.value() * b.value());
    return t->record(a.value() * b.value(), a, b.value(), b, a.value());
}
inline Var operator/(const Var& a, const Var& b) {
    Tape* t = detail::pick(a, b);
    const double q = a.value() / b.value();
    if (!t) return Var(q);
    return t->record(q, a, 1.0 / b.value(), b, -q / b.value());
}
inline Var operator-(const Var& a) {
    if (!a.tape()) return Var(-a.value());
    return a.tape()->record(-a.value(), a, -1.0);
}
inline Var& operator+=(Var& a, const Var& b) { return a = a + b; }
inline Var& operator-=(Var& a, const Var& b) { return a = a - b; }
inline Var& operator*=(Var& a, const Var& b) { return a = a * b; }

inline Var exp(const Var& a) {
    const double e = std::exp(a.value());
    if (!a.tape()) return Var(e);
    return a.tape()->record(e, a, e);
}
inline Var log(const Var& a) {
    if (!a.tape()) return Var(std::log(a.value()));
    return a.tape()->record(std::log(a.value()), a, 1.0 / a.value());
}
inline Var tanh(const Var& a) {
    const double th = std::tanh(a.value());
    if (!a.tape()) return Var(th);
    return a.tape()->record(th, a, 1.0 - th * th);
}
inline Var relu(const Var& a) {
    if (a.value() > 0.0) return a;
    return Var(0.0);
}

inline double relu(double x) { return x > 0.0 ? x : 0.0; }

// Derivative of relu; 0 at exactly 0.
inline double relu_step(double x) { return x > 0.0 ? 1.0 : 0.0; }

inline double value_of(double x) { return x; }
inline double value_of(const Var& v) { return v.value(); }

template <class T>
struct Dual {
    T value{};
    T tangent{};

    Dual() = default;
    Dual(T v) : value(std::move(v)), tangent(0.0) {} // NOLINT(google-explicit-constructor)
    Dual(T v, T d) : value(std::move(v)), tangent(std::move(d)) {}
};

template <class T>
Dual<T> operator+(const Dual<T>& a, const Dual<T>& b) {
    return {a.value + b.value, a.tangent + b.tangent};
}
template <class T>
Dual<T> operator-(const Dual<T>& a, const Dual<T>& b) {
    return {a.value - b.value, a.tangent - b.tangent};
}
template <class T>
Dual<T> operator-(const Dual<T>& a) {
    return {-a.value, -a.tangent};
}
template <class T>
Dual<T> operator*(const Dual<T>& a, const Dual<T>& b) {
    return {a.value * b.value, a.tangent * b.value + a.value * b.tangent};
}
template <class T>
Dual<T> operator/(const Dual<T>& a, const Dual<T>& b) {
    T q = a.value / b.value;
    return {q, (a.tangent - q * b.tangent) / b.value};
}
template <class T>
Dual<T> relu(const Dual<T>& a) {
    if (value_of(a.value) > 0.0) return a;
    return {T(0.0), T(0.0)};
}
template <class T>
Dual<T> tanh(const Dual<T>& a) {
    using std::tanh;
    T th = tanh(a.value);
    return {th, (T(1.0) - th * th) * a.tangent};
}

} // namespace dinnlab::ad
