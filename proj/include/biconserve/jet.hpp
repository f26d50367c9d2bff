#ifndef BICONSERVE_JET_HPP
#define BICONSERVE_JET_HPP

#include <cmath>

namespace biconserve {

// Exact-match overloads for plain doubles, so the templated kernels below
// instantiate on double as well as on jets.
using std::exp;
using std::log;
using std::pow;
using std::sqrt;

// Truncated Taylor arithmetic in one parameter. Feeding (h, h', h'') jets
// of the arguments through an expression yields the exact value, first and
// second derivative of the composite along the parameter, so curvature
// formulas never have to be differentiated by hand.

struct Jet1 {
    double f = 0.0, d1 = 0.0;
    Jet1() = default;
    Jet1(double f_, double d1_ = 0.0) : f(f_), d1(d1_) {}
};

struct Jet2 {
    double f = 0.0, d1 = 0.0, d2 = 0.0;
    Jet2() = default;
    Jet2(double f_, double d1_ = 0.0, double d2_ = 0.0) : f(f_), d1(d1_), d2(d2_) {}
};

// ---- Jet1 -----------------------------------------------------------------

inline Jet1 operator+(Jet1 a, Jet1 b) { return {a.f + b.f, a.d1 + b.d1}; }
inline Jet1 operator-(Jet1 a, Jet1 b) { return {a.f - b.f, a.d1 - b.d1}; }
inline Jet1 operator-(Jet1 a) { return {-a.f, -a.d1}; }
inline Jet1 operator*(Jet1 a, Jet1 b) { return {a.f * b.f, a.d1 * b.f + a.f * b.d1}; }
inline Jet1 operator/(Jet1 a, Jet1 b) {
    const double q = a.f / b.f;
    return {q, (a.d1 - q * b.d1) / b.f};
}
inline Jet1 operator+(Jet1 a, double b) { return {a.f + b, a.d1}; }
inline Jet1 operator+(double a, Jet1 b) { return b + a; }
inline Jet1 operator-(Jet1 a, double b) { return {a.f - b, a.d1}; }
inline Jet1 operator-(double a, Jet1 b) { return {a - b.f, -b.d1}; }
inline Jet1 operator*(Jet1 a, double b) { return {a.f * b, a.d1 * b}; }
inline Jet1 operator*(double a, Jet1 b) { return b * a; }
inline Jet1 operator/(Jet1 a, double b) { return {a.f / b, a.d1 / b}; }
inline Jet1 operator/(double a, Jet1 b) { return Jet1(a) / b; }

inline Jet1 log(Jet1 a) { return {std::log(a.f), a.d1 / a.f}; }
inline Jet1 exp(Jet1 a) {
    const double e = std::exp(a.f);
    return {e, e * a.d1};
}
inline Jet1 sqrt(Jet1 a) {
    const double r = std::sqrt(a.f);
    return {r, a.d1 / (2.0 * r)};
}
inline Jet1 pow(Jet1 a, double p) {
    const double w = std::pow(a.f, p);
    return {w, p * std::pow(a.f, p - 1.0) * a.d1};
}
inline Jet1 pow(Jet1 a, Jet1 p) { return exp(p * log(a)); }

// ---- Jet2 -----------------------------------------------------------------

inline Jet2 operator+(Jet2 a, Jet2 b) { return {a.f + b.f, a.d1 + b.d1, a.d2 + b.d2}; }
inline Jet2 operator-(Jet2 a, Jet2 b) { return {a.f - b.f, a.d1 - b.d1, a.d2 - b.d2}; }
inline Jet2 operator-(Jet2 a) { return {-a.f, -a.d1, -a.d2}; }
inline Jet2 operator*(Jet2 a, Jet2 b) {
    return {a.f * b.f,
            a.d1 * b.f + a.f * b.d1,
            a.d2 * b.f + 2.0 * a.d1 * b.d1 + a.f * b.d2};
}
inline Jet2 operator/(Jet2 a, Jet2 b) {
    const double q = a.f / b.f;
    const double q1 = (a.d1 - q * b.d1) / b.f;
    const double q2 = (a.d2 - 2.0 * q1 * b.d1 - q * b.d2) / b.f;
    return {q, q1, q2};
}
inline Jet2 operator+(Jet2 a, double b) { return {a.f + b, a.d1, a.d2}; }
inline Jet2 operator+(double a, Jet2 b) { return b + a; }
inline Jet2 operator-(Jet2 a, double b) { return {a.f - b, a.d1, a.d2}; }
inline Jet2 operator-(double a, Jet2 b) { return {a - b.f, -b.d1, -b.d2}; }
inline Jet2 operator*(Jet2 a, double b) { return {a.f * b, a.d1 * b, a.d2 * b}; }
inline Jet2 operator*(double a, Jet2 b) { return b * a; }
inline Jet2 operator/(Jet2 a, double b) { return {a.f / b, a.d1 / b, a.d2 / b}; }
inline Jet2 operator/(double a, Jet2 b) { return Jet2(a) / b; }

inline Jet2 log(Jet2 a) {
    const double l1 = a.d1 / a.f;
    return {std::log(a.f), l1, a.d2 / a.f - l1 * l1};
}
inline Jet2 exp(Jet2 a) {
    const double e = std::exp(a.f);
    return {e, e * a.d1, e * (a.d2 + a.d1 * a.d1)};
}
inline Jet2 sqrt(Jet2 a) {
    const double r = std::sqrt(a.f);
    const double r1 = a.d1 / (2.0 * r);
    return {r, r1, (a.d2 - 2.0 * r1 * r1) / (2.0 * r)};
}
inline Jet2 pow(Jet2 a, double p) {
    const double w = std::pow(a.f, p);
    const double w1 = p * std::pow(a.f, p - 1.0);
    const double w2 = p * (p - 1.0) * std::pow(a.f, p - 2.0);
    return {w, w1 * a.d1, w2 * a.d1 * a.d1 + w1 * a.d2};
}
inline Jet2 pow(Jet2 a, Jet2 p) { return exp(p * log(a)); }

} // namespace biconserve

#endif
