#pragma once

// Polynomials in the matrix entries of a point (g, Y) of G x g, viewed inside
// gl(n, C) x gl(n, C). Monomials are written like "g11*g12^2*y21" with
// 1-based indices; "1" is the constant.

#include <cctype>
#include <functional>
#include <string>
#include <vector>

#include "nahmkn/errors.hpp"
#include "nahmkn/moduli_map.hpp"

namespace nahmkn {

struct Polynomial {
  std::string name;
  int degree = 0;
  std::function<Complex(const CotangentPoint&)> eval;

  Complex operator()(const CotangentPoint& q) const { return eval(q); }
};

struct MonomialFactor {
  bool in_y = false;
  int row = 0, col = 0, power = 1;
};

inline std::vector<MonomialFactor> parse_monomial(const std::string& text) {
  std::vector<MonomialFactor> out;
  if (text == "1") return out;
  std::size_t i = 0;
  const auto fail = [&] { throw InvalidProblem("cannot parse monomial '" + text + "'"); };
  while (i < text.size()) {
    MonomialFactor f;
    const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(text[i])));
    if (c != 'g' && c != 'y') fail();
    f.in_y = c == 'y';
    if (i + 2 >= text.size() + 0 || !std::isdigit(static_cast<unsigned char>(text[i + 1])) ||
        !std::isdigit(static_cast<unsigned char>(text[i + 2])))
      fail();
    f.row = text[i + 1] - '0';
    f.col = text[i + 2] - '0';
    if (f.row < 1 || f.col < 1) fail();
    i += 3;
    if (i < text.size() && text[i] == '^') {
      std::size_t used = 0;
      f.power = std::stoi(text.substr(i + 1), &used);
      if (used == 0 || f.power < 1) fail();
      i += 1 + used;
    }
    out.push_back(f);
    if (i < text.size()) {
      if (text[i] != '*') fail();
      ++i;
      if (i == text.size()) fail();
    }
  }
  return out;
}

inline Polynomial monomial(const std::string& text) {
  auto factors = parse_monomial(text);
  int degree = 0;
  for (const auto& f : factors) degree += f.power;
  return {text, degree, [factors](const CotangentPoint& q) {
            Complex v{1.0, 0.0};
            for (const auto& f : factors) {
              const Matrix& m = f.in_y ? q.y : q.g;
              if (f.row > m.rows() || f.col > m.cols()) throw RankMismatch("monomial index out of range");
              v *= std::pow(m(f.row - 1, f.col - 1), f.power);
            }
            return v;
          }};
}

/// (tr g Y)^3, degree 6.
inline Polynomial trace_gy_cubed() {
  return {"(tr gY)^3", 6, [](const CotangentPoint& q) { return std::pow((q.g * q.y).trace(), 3); }};
}

/// Ten monomials of degree <= 6 used by the domination scan.
inline std::vector<Polynomial> default_monomials() {
  std::vector<Polynomial> out;
  for (const char* m : {"1", "g11", "g12", "y12", "g11*g22", "g21^2*y11", "g11^3", "g12*g21*y12*y21",
                        "g11^2*g22^2*y12", "g11^3*y21^3"})
    out.push_back(monomial(m));
  return out;
}

}  // namespace nahmkn
