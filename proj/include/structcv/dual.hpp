#pragma once

// Forward-mode dual scalars.
//
// Dual carries one directional first derivative. Dual2 is a hyper-dual number
// value + du*eu + dv*ev + d2*eu*ev with eu^2 = ev^2 = 0: seeding du along
// direction u and dv along direction v makes d2 the second directional
// derivative u^T (d^2 f) v. Both satisfy the exact chain rule for the
// operations below, and lifting a constant leaves every derivative slot zero.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <type_traits>
#include <vector>

namespace structcv {

using std::exp;
using std::log;
using std::sqrt;

struct Dual {
  double value = 0.0;
  double du = 0.0;

  constexpr Dual() = default;
  constexpr Dual(double v) : value(v) {}  // NOLINT(google-explicit-constructor)
  constexpr Dual(double v, double d) : value(v), du(d) {}

  Dual& operator+=(const Dual& o) { value += o.value; du += o.du; return *this; }
  Dual& operator-=(const Dual& o) { value -= o.value; du -= o.du; return *this; }
  Dual& operator*=(const Dual& o) {
    du = du * o.value + value * o.du;
    value *= o.value;
    return *this;
  }
  Dual& operator+=(double o) { value += o; return *this; }
  Dual& operator-=(double o) { value -= o; return *this; }
  Dual& operator*=(double o) { value *= o; du *= o; return *this; }
};

struct Dual2 {
  double value = 0.0;
  double du = 0.0;
  double dv = 0.0;
  double d2 = 0.0;

  constexpr Dual2() = default;
  constexpr Dual2(double v) : value(v) {}  // NOLINT(google-explicit-constructor)
  constexpr Dual2(double v, double u, double w, double uv) : value(v), du(u), dv(w), d2(uv) {}

  Dual2& operator+=(const Dual2& o) {
    value += o.value; du += o.du; dv += o.dv; d2 += o.d2;
    return *this;
  }
  Dual2& operator-=(const Dual2& o) {
    value -= o.value; du -= o.du; dv -= o.dv; d2 -= o.d2;
    return *this;
  }
  Dual2& operator*=(const Dual2& o) {
    d2 = d2 * o.value + value * o.d2 + du * o.dv + dv * o.du;
    du = du * o.value + value * o.du;
    dv = dv * o.value + value * o.dv;
    value *= o.value;
    return *this;
  }
  Dual2& operator+=(double o) { value += o; return *this; }
  Dual2& operator-=(double o) { value -= o; return *this; }
  Dual2& operator*=(double o) { value *= o; du *= o; dv *= o; d2 *= o; return *this; }
};

// ---- Dual arithmetic ----

inline Dual operator+(Dual a, const Dual& b) { return a += b; }
inline Dual operator-(Dual a, const Dual& b) { return a -= b; }
inline Dual operator*(Dual a, const Dual& b) { return a *= b; }
inline Dual operator+(Dual a, double b) { return a += b; }
inline Dual operator+(double a, Dual b) { return b += a; }
inline Dual operator-(Dual a, double b) { return a -= b; }
inline Dual operator-(double a, const Dual& b) { return {a - b.value, -b.du}; }
inline Dual operator*(Dual a, double b) { return a *= b; }
inline Dual operator*(double a, Dual b) { return b *= a; }
inline Dual operator-(const Dual& a) { return {-a.value, -a.du}; }
inline Dual operator/(const Dual& a, const Dual& b) {
  const double q = a.value / b.value;
  return {q, (a.du - q * b.du) / b.value};
}
inline Dual operator/(const Dual& a, double b) { return {a.value / b, a.du / b}; }
inline Dual operator/(double a, const Dual& b) {
  const double q = a / b.value;
  return {q, -q * b.du / b.value};
}

inline Dual exp(const Dual& a) {
  const double e = std::exp(a.value);
  return {e, e * a.du};
}
inline Dual log(const Dual& a) { return {std::log(a.value), a.du / a.value}; }
inline Dual sqrt(const Dual& a) {
  const double s = std::sqrt(a.value);
  return {s, a.du / (2.0 * s)};
}
// log(1 + exp(a)), stable for large |a|.
inline Dual softplus(const Dual& a) {
  const double v = a.value > 0 ? a.value + std::log1p(std::exp(-a.value)) : std::log1p(std::exp(a.value));
  const double s = 1.0 / (1.0 + std::exp(-a.value));
  return {v, s * a.du};
}

// ---- Dual2 arithmetic ----

inline Dual2 operator+(Dual2 a, const Dual2& b) { return a += b; }
inline Dual2 operator-(Dual2 a, const Dual2& b) { return a -= b; }
inline Dual2 operator*(Dual2 a, const Dual2& b) { return a *= b; }
inline Dual2 operator+(Dual2 a, double b) { return a += b; }
inline Dual2 operator+(double a, Dual2 b) { return b += a; }
inline Dual2 operator-(Dual2 a, double b) { return a -= b; }
inline Dual2 operator-(double a, const Dual2& b) { return {a - b.value, -b.du, -b.dv, -b.d2}; }
inline Dual2 operator*(Dual2 a, double b) { return a *= b; }
inline Dual2 operator*(double a, Dual2 b) { return b *= a; }
inline Dual2 operator-(const Dual2& a) { return {-a.value, -a.du, -a.dv, -a.d2}; }

// Applies a scalar function with value f0, first derivative f1 and second
// derivative f2 at a.value.
inline Dual2 lift(const Dual2& a, double f0, double f1, double f2) {
  return {f0, f1 * a.du, f1 * a.dv, f1 * a.d2 + f2 * a.du * a.dv};
}

inline Dual2 operator/(const Dual2& a, const Dual2& b) {
  const double r = 1.0 / b.value;
  return a * lift(b, r, -r * r, 2.0 * r * r * r);
}
inline Dual2 operator/(const Dual2& a, double b) { return a * (1.0 / b); }
inline Dual2 operator/(double a, const Dual2& b) {
  const double r = 1.0 / b.value;
  return lift(b, a * r, -a * r * r, 2.0 * a * r * r * r);
}

inline Dual2 exp(const Dual2& a) {
  const double e = std::exp(a.value);
  return lift(a, e, e, e);
}
inline Dual2 log(const Dual2& a) {
  const double r = 1.0 / a.value;
  return lift(a, std::log(a.value), r, -r * r);
}
inline Dual2 sqrt(const Dual2& a) {
  const double s = std::sqrt(a.value);
  return lift(a, s, 0.5 / s, -0.25 / (s * a.value));
}
inline Dual2 softplus(const Dual2& a) {
  const double v = a.value > 0 ? a.value + std::log1p(std::exp(-a.value)) : std::log1p(std::exp(a.value));
  const double s = 1.0 / (1.0 + std::exp(-a.value));
  return lift(a, v, s, s * (1.0 - s));
}

inline double softplus(double a) {
  return a > 0 ? a + std::log1p(std::exp(-a)) : std::log1p(std::exp(a));
}

// ---- scalar traits ----

inline double value_of(double x) { return x; }
inline double value_of(const Dual& x) { return x.value; }
inline double value_of(const Dual2& x) { return x.value; }

inline bool all_finite(double x) { return std::isfinite(x); }
inline bool all_finite(const Dual& x) { return std::isfinite(x.value) && std::isfinite(x.du); }
inline bool all_finite(const Dual2& x) {
  return std::isfinite(x.value) && std::isfinite(x.du) && std::isfinite(x.dv) && std::isfinite(x.d2);
}

template <class S>
inline constexpr bool is_scalar_v = std::is_same_v<S, double> || std::is_same_v<S, Dual> || std::is_same_v<S, Dual2>;

// ---- log-sum-exp ----
//
// The max shift is taken on values only; any constant shift is exact for the
// derivative slots. For Dual2 the result uses the softmax weights directly:
// first slots are softmax-weighted averages and the cross slot adds the
// softmax covariance term.

inline double log_sum_exp(std::span<const double> xs) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : xs) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

inline Dual log_sum_exp(std::span<const Dual> xs) {
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& x : xs) m = std::max(m, x.value);
  if (!std::isfinite(m)) return {m, 0.0};
  double s = 0.0, su = 0.0;
  for (const auto& x : xs) {
    const double e = std::exp(x.value - m);
    s += e;
    su += e * x.du;
  }
  return {m + std::log(s), su / s};
}

inline Dual2 log_sum_exp(std::span<const Dual2> xs) {
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& x : xs) m = std::max(m, x.value);
  if (!std::isfinite(m)) return {m, 0.0, 0.0, 0.0};
  double s = 0.0, su = 0.0, sv = 0.0, s2 = 0.0;
  for (const auto& x : xs) {
    const double e = std::exp(x.value - m);
    s += e;
    su += e * x.du;
    sv += e * x.dv;
    s2 += e * (x.d2 + x.du * x.dv);
  }
  const double u = su / s, v = sv / s;
  return {m + std::log(s), u, v, s2 / s - u * v};
}

template <class S>
inline S log_sum_exp(const std::vector<S>& xs) {
  return log_sum_exp(std::span<const S>(xs.data(), xs.size()));
}

template <class S>
inline S log_add_exp(const S& a, const S& b) {
  const S pair[2] = {a, b};
  return log_sum_exp(std::span<const S>(pair, 2));
}

// Streaming log-sum-exp. The running shift is a plain double, so rescaling
// never touches derivative information.
template <class S>
class LogSumExpAccumulator {
 public:
  void add(const S& x) {
    const double xv = value_of(x);
    if (xv == -std::numeric_limits<double>::infinity()) return;
    if (!started_) {
      shift_ = xv;
      sum_ = exp(x - shift_);
      started_ = true;
      return;
    }
    if (xv > shift_) {
      sum_ = sum_ * std::exp(shift_ - xv);
      shift_ = xv;
    }
    sum_ += exp(x - shift_);
  }
  S result() const {
    if (!started_) return S(-std::numeric_limits<double>::infinity());
    return log(sum_) + shift_;
  }

 private:
  static double exp(double x) { return std::exp(x); }
  static double log(double x) { return std::log(x); }
  static Dual exp(const Dual& x) { return structcv::exp(x); }
  static Dual log(const Dual& x) { return structcv::log(x); }
  static Dual2 exp(const Dual2& x) { return structcv::exp(x); }
  static Dual2 log(const Dual2& x) { return structcv::log(x); }

  bool started_ = false;
  double shift_ = 0.0;
  S sum_{};
};

}  // namespace structcv
