#pragma once

// Closed-form scalar expressions: finite sums of
//   c * x^a * y^b * z^c * trig(k1 x) * trig(k2 y) * trig(k3 z)
// with analytic gradient and Hessian.
//
// Text form: terms separated by ';', factors by '*':
//   "0.01*sin(2*pi*x)*sin(2*pi*y); -0.5*x^2*z; 1.5"
// A trig argument is [number*][pi*]var.  At most one trig factor per axis.

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace tbound::expr {

enum class Trig { none, sin, cos };

struct Term {
  double coef = 1.0;
  std::array<int, 3> power{0, 0, 0};
  std::array<Trig, 3> trig{Trig::none, Trig::none, Trig::none};
  std::array<double, 3> wave{0, 0, 0};
};

class Series {
 public:
  Series() = default;
  explicit Series(std::vector<Term> terms) : terms_(std::move(terms)) {}

  /// Throws ConfigError on malformed text.  Empty or blank text is the zero series.
  static Series parse(const std::string& text);

  double value(const Eigen::Vector3d& x) const;
  Eigen::Vector3d gradient(const Eigen::Vector3d& x) const;
  Eigen::Matrix3d hessian(const Eigen::Vector3d& x) const;

  bool empty() const { return terms_.empty(); }
  const std::vector<Term>& terms() const { return terms_; }
  /// Canonical text (round-trips through parse).
  std::string to_string() const;

 private:
  std::vector<Term> terms_;
};

}  // namespace tbound::expr
