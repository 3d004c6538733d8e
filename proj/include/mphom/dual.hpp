#pragma once

#include <cmath>
#include <ostream>

namespace mphom {

/// Forward-mode dual number: value plus first derivative along one direction.
template <class T = double>
struct Dual {
  T v{};
  T d{};

  constexpr Dual() = default;
  constexpr Dual(T value) : v(value), d(T{}) {}
  constexpr Dual(T value, T deriv) : v(value), d(deriv) {}

  Dual& operator+=(const Dual& o) { v += o.v; d += o.d; return *this; }
  Dual& operator-=(const Dual& o) { v -= o.v; d -= o.d; return *this; }
  Dual& operator*=(const Dual& o) { d = d * o.v + v * o.d; v *= o.v; return *this; }
  Dual& operator/=(const Dual& o) {
    d = (d * o.v - v * o.d) / (o.v * o.v);
    v /= o.v;
    return *this;
  }
};

template <class T> Dual<T> operator-(const Dual<T>& a) { return {-a.v, -a.d}; }
template <class T> Dual<T> operator+(Dual<T> a, const Dual<T>& b) { return a += b; }
template <class T> Dual<T> operator-(Dual<T> a, const Dual<T>& b) { return a -= b; }
template <class T> Dual<T> operator*(Dual<T> a, const Dual<T>& b) { return a *= b; }
template <class T> Dual<T> operator/(Dual<T> a, const Dual<T>& b) { return a /= b; }
template <class T> Dual<T> operator+(Dual<T> a, T b) { a.v += b; return a; }
template <class T> Dual<T> operator+(T b, Dual<T> a) { a.v += b; return a; }
template <class T> Dual<T> operator-(Dual<T> a, T b) { a.v -= b; return a; }
template <class T> Dual<T> operator-(T b, const Dual<T>& a) { return {b - a.v, -a.d}; }
template <class T> Dual<T> operator*(Dual<T> a, T b) { return {a.v * b, a.d * b}; }
template <class T> Dual<T> operator*(T b, Dual<T> a) { return {a.v * b, a.d * b}; }
template <class T> Dual<T> operator/(Dual<T> a, T b) { return {a.v / b, a.d / b}; }
template <class T> Dual<T> operator/(T b, const Dual<T>& a) { return {b / a.v, -b * a.d / (a.v * a.v)}; }

template <class T> bool operator<(const Dual<T>& a, const Dual<T>& b) { return a.v < b.v; }
template <class T> bool operator>(const Dual<T>& a, const Dual<T>& b) { return a.v > b.v; }
template <class T> bool operator<(const Dual<T>& a, T b) { return a.v < b; }
template <class T> bool operator>(const Dual<T>& a, T b) { return a.v > b; }

template <class T> Dual<T> sin(const Dual<T>& a) { using std::sin, std::cos; return {sin(a.v), cos(a.v) * a.d}; }
template <class T> Dual<T> cos(const Dual<T>& a) { using std::sin, std::cos; return {cos(a.v), -sin(a.v) * a.d}; }
template <class T> Dual<T> exp(const Dual<T>& a) { using std::exp; T e = exp(a.v); return {e, e * a.d}; }
template <class T> Dual<T> log(const Dual<T>& a) { using std::log; return {log(a.v), a.d / a.v}; }
template <class T> Dual<T> sqrt(const Dual<T>& a) { using std::sqrt; T r = sqrt(a.v); return {r, a.d / (T(2) * r)}; }
template <class T> Dual<T> abs(const Dual<T>& a) { return a.v < T{} ? -a : a; }

template <class T> std::ostream& operator<<(std::ostream& os, const Dual<T>& a) {
  return os << a.v << "+" << a.d << "e";
}

inline double value_of(double x) { return x; }
template <class T> T value_of(const Dual<T>& x) { return x.v; }
inline double deriv_of(double) { return 0.0; }
template <class T> T deriv_of(const Dual<T>& x) { return x.d; }

/// Integer power by repeated squaring; works for any scalar with operator*.
template <class T> T ipow(T base, int n) {
  T r(1.0);
  bool inv = n < 0;
  unsigned e = inv ? unsigned(-n) : unsigned(n);
  while (e) {
    if (e & 1u) r = r * base;
    base = base * base;
    e >>= 1u;
  }
  return inv ? T(1.0) / r : r;
}

}  // namespace mphom
