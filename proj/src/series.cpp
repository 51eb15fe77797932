#include "tbound/series.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "tbound/error.hpp"

namespace tbound::expr {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  for (char ch : s) {
    if (ch == '(') ++depth;
    if (ch == ')') --depth;
    if (ch == sep && depth == 0) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(trim(cur));
  return out;
}

[[noreturn]] void bad(const std::string& what, const std::string& text) {
  throw ConfigError("bad series " + what + ": '" + text + "'", "config");
}

bool parse_number(const std::string& s, double& v) {
  if (s.empty()) return false;
  char* end = nullptr;
  v = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

int axis_of(const std::string& s) {
  if (s == "x") return 0;
  if (s == "y") return 1;
  if (s == "z") return 2;
  return -1;
}

// [number*][pi*]var
void parse_argument(const std::string& arg, double& k, int& axis) {
  k = 1.0;
  axis = -1;
  for (const std::string& f : split(arg, '*')) {
    double v;
    if (f == "pi") {
      k *= kPi;
    } else if (parse_number(f, v)) {
      k *= v;
    } else if (axis_of(f) >= 0 && axis < 0) {
      axis = axis_of(f);
    } else {
      bad("trig argument", arg);
    }
  }
  if (axis < 0) bad("trig argument (no variable)", arg);
}

Term parse_term(const std::string& text) {
  Term t;
  std::string body = text;
  if (!body.empty() && (body[0] == '-' || body[0] == '+')) {
    if (body[0] == '-') t.coef = -1.0;
    body = trim(body.substr(1));
  }
  for (const std::string& f : split(body, '*')) {
    double v;
    if (f.empty()) bad("term", text);
    if (parse_number(f, v)) {
      t.coef *= v;
    } else if (f == "pi") {
      t.coef *= kPi;
    } else if (f.rfind("sin(", 0) == 0 || f.rfind("cos(", 0) == 0) {
      if (f.back() != ')') bad("factor", f);
      double k;
      int axis;
      parse_argument(f.substr(4, f.size() - 5), k, axis);
      if (t.trig[axis] != Trig::none) bad("term (two trig factors on one axis)", text);
      t.trig[axis] = f[0] == 's' ? Trig::sin : Trig::cos;
      t.wave[axis] = k;
    } else {
      const auto caret = f.find('^');
      const int axis = axis_of(f.substr(0, caret));
      if (axis < 0) bad("factor", f);
      int p = 1;
      if (caret != std::string::npos) {
        double e;
        if (!parse_number(f.substr(caret + 1), e) || e < 0 || e != std::floor(e)) bad("exponent", f);
        p = static_cast<int>(e);
      }
      t.power[axis] += p;
    }
  }
  return t;
}

// g(t) = t^p trig(k t) and its first two derivatives.
void factor(const Term& t, int a, double x, double out[3]) {
  const int p = t.power[a];
  const double k = t.wave[a];
  double tr = 1.0, dtr = 0.0, ddtr = 0.0;
  if (t.trig[a] == Trig::sin) {
    const double s = std::sin(k * x), c = std::cos(k * x);
    tr = s, dtr = k * c, ddtr = -k * k * s;
  } else if (t.trig[a] == Trig::cos) {
    const double s = std::sin(k * x), c = std::cos(k * x);
    tr = c, dtr = -k * s, ddtr = -k * k * c;
  }
  const double m0 = std::pow(x, p);
  const double m1 = p >= 1 ? p * std::pow(x, p - 1) : 0.0;
  const double m2 = p >= 2 ? p * (p - 1) * std::pow(x, p - 2) : 0.0;
  out[0] = m0 * tr;
  out[1] = m1 * tr + m0 * dtr;
  out[2] = m2 * tr + 2.0 * m1 * dtr + m0 * ddtr;
}

}  // namespace

Series Series::parse(const std::string& text) {
  std::vector<Term> terms;
  for (const std::string& part : split(text, ';')) {
    if (part.empty()) continue;
    terms.push_back(parse_term(part));
  }
  return Series(std::move(terms));
}

double Series::value(const Eigen::Vector3d& x) const {
  double s = 0.0;
  for (const Term& t : terms_) {
    double v = t.coef;
    for (int a = 0; a < 3; ++a) {
      double f[3];
      factor(t, a, x(a), f);
      v *= f[0];
    }
    s += v;
  }
  return s;
}

Eigen::Vector3d Series::gradient(const Eigen::Vector3d& x) const {
  Eigen::Vector3d g = Eigen::Vector3d::Zero();
  for (const Term& t : terms_) {
    double f[3][3];
    for (int a = 0; a < 3; ++a) factor(t, a, x(a), f[a]);
    g(0) += t.coef * f[0][1] * f[1][0] * f[2][0];
    g(1) += t.coef * f[0][0] * f[1][1] * f[2][0];
    g(2) += t.coef * f[0][0] * f[1][0] * f[2][1];
  }
  return g;
}

Eigen::Matrix3d Series::hessian(const Eigen::Vector3d& x) const {
  Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
  for (const Term& t : terms_) {
    double f[3][3];
    for (int a = 0; a < 3; ++a) factor(t, a, x(a), f[a]);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double v = t.coef;
        for (int a = 0; a < 3; ++a) v *= f[a][int(a == i) + int(a == j)];
        h(i, j) += v;
      }
  }
  return h;
}

std::string Series::to_string() const {
  std::ostringstream os;
  os.precision(17);
  const char* var = "xyz";
  for (std::size_t n = 0; n < terms_.size(); ++n) {
    const Term& t = terms_[n];
    if (n) os << "; ";
    os << t.coef;
    for (int a = 0; a < 3; ++a) {
      if (t.power[a] == 1) os << '*' << var[a];
      if (t.power[a] > 1) os << '*' << var[a] << '^' << t.power[a];
    }
    for (int a = 0; a < 3; ++a)
      if (t.trig[a] != Trig::none)
        os << '*' << (t.trig[a] == Trig::sin ? "sin(" : "cos(") << t.wave[a] << '*' << var[a] << ')';
  }
  return os.str();
}

}  // namespace tbound::expr
