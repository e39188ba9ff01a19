#include "mirrorwm/mirror.hpp"

#include <cmath>
#include <stdexcept>

namespace mirrorwm {

namespace {

void check_symbol(int m, int symbol) {
  if (m < 0 || m > 62) throw std::invalid_argument("mirror: m out of range");
  if (symbol < 0 || symbol >= (1LL << m)) {
    throw std::invalid_argument("mirror: symbol out of range for m bits");
  }
}

double mod1(double x) {
  double r = x - std::floor(x);
  if (r >= 1.0) r = 0.0;  // floor rounding edge
  return r;
}

}  // namespace

double pivot(int m, int symbol) {
  check_symbol(m, symbol);
  return static_cast<double>(symbol) / std::ldexp(1.0, m + 1);
}

double mirror(double u, int m, int symbol) {
  if (u < 0.0 || u >= 1.0) throw std::invalid_argument("mirror: u must be in [0,1)");
  return mod1(2.0 * pivot(m, symbol) - u);
}

double mirror_1bit(double u, int bit) {
  if (u < 0.0 || u >= 1.0) throw std::invalid_argument("mirror_1bit: u must be in [0,1)");
  if (bit == 1) return u;
  if (bit == 0) return u == 0.0 ? 0.0 : 1.0 - u;
  throw std::invalid_argument("mirror_1bit: bit must be 0 or 1");
}

double mirror_for(double u, int m, int symbol) {
  return m == 1 ? mirror_1bit(u, symbol) : mirror(u, m, symbol);
}

double shift_identity_residual(double u, int m, int symbol_a, int symbol_b) {
  const double lhs = mirror(u, m, symbol_a);
  const double shift = 2.0 * (pivot(m, symbol_a) - pivot(m, symbol_b));
  const double rhs = mod1(mirror(u, m, symbol_b) + shift);
  return std::fabs(lhs - rhs);
}

}  // namespace mirrorwm
