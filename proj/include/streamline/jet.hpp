#pragma once

#include <cmath>

#include "streamline/types.hpp"

namespace streamline {

// Second-order forward jet: value, gradient and hessian in up to four
// variables. Only the upper triangle is propagated; hess() mirrors it.
class Jet2 {
 public:
  Jet2() = default;

  static Jet2 constant(int n, double v) {
    Jet2 j;
    j.n_ = n;
    j.v_ = v;
    return j;
  }

  static Jet2 variable(int n, int index, double v) {
    Jet2 j = constant(n, v);
    j.g_[index] = 1.0;
    return j;
  }

  int size() const { return n_; }
  double value() const { return v_; }
  double grad(int i) const { return g_[i]; }
  double hess(int i, int j) const { return i <= j ? h_[i][j] : h_[j][i]; }
  const Vec& gradient() const { return g_; }

  Mat hessian() const {
    Mat m{};
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) m[i][j] = hess(i, j);
    return m;
  }

  double laplacian() const {
    double s = 0.0;
    for (int i = 0; i < n_; ++i) s += h_[i][i];
    return s;
  }

  bool finite() const {
    if (!std::isfinite(v_)) return false;
    for (int i = 0; i < n_; ++i) {
      if (!std::isfinite(g_[i])) return false;
      for (int j = i; j < n_; ++j)
        if (!std::isfinite(h_[i][j])) return false;
    }
    return true;
  }

  // f(u) given f, f', f'' at u's value.
  Jet2 chain(double f0, double f1, double f2) const {
    Jet2 r = constant(n_, f0);
    for (int i = 0; i < n_; ++i) {
      r.g_[i] = f1 * g_[i];
      for (int j = i; j < n_; ++j) r.h_[i][j] = f1 * h_[i][j] + f2 * g_[i] * g_[j];
    }
    return r;
  }

  friend Jet2 operator+(const Jet2& a, const Jet2& b) {
    Jet2 r = constant(a.n_, a.v_ + b.v_);
    for (int i = 0; i < a.n_; ++i) {
      r.g_[i] = a.g_[i] + b.g_[i];
      for (int j = i; j < a.n_; ++j) r.h_[i][j] = a.h_[i][j] + b.h_[i][j];
    }
    return r;
  }

  friend Jet2 operator-(const Jet2& a, const Jet2& b) {
    Jet2 r = constant(a.n_, a.v_ - b.v_);
    for (int i = 0; i < a.n_; ++i) {
      r.g_[i] = a.g_[i] - b.g_[i];
      for (int j = i; j < a.n_; ++j) r.h_[i][j] = a.h_[i][j] - b.h_[i][j];
    }
    return r;
  }

  friend Jet2 operator-(const Jet2& a) { return a.chain(-a.v_, -1.0, 0.0); }

  friend Jet2 operator*(const Jet2& a, const Jet2& b) {
    Jet2 r = constant(a.n_, a.v_ * b.v_);
    for (int i = 0; i < a.n_; ++i) {
      r.g_[i] = a.g_[i] * b.v_ + a.v_ * b.g_[i];
      for (int j = i; j < a.n_; ++j)
        r.h_[i][j] = a.h_[i][j] * b.v_ + a.v_ * b.h_[i][j] + a.g_[i] * b.g_[j] +
                     a.g_[j] * b.g_[i];
    }
    return r;
  }

  friend Jet2 operator*(double s, const Jet2& a) { return a.chain(s * a.v_, s, 0.0); }

  // Caller guarantees b.value() != 0.
  friend Jet2 operator/(const Jet2& a, const Jet2& b) {
    const double inv = 1.0 / b.v_;
    return a * b.chain(inv, -inv * inv, 2.0 * inv * inv * inv);
  }

 private:
  int n_ = 0;
  double v_ = 0.0;
  Vec g_{};
  Mat h_{};
};

}  // namespace streamline
