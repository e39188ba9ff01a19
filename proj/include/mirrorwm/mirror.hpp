#pragma once

namespace mirrorwm {

// Pivot for symbol M in an m-bit alphabet: M / 2^(m+1). Pivots are dyadic
// rationals, exact in double precision.
double pivot(int m, int symbol);

// Measure-preserving reflection of u in [0,1) around the symbol pivot:
// (2*pivot - u) mod 1. An involution: applying it twice returns u.
double mirror(double u, int m, int symbol);

// One-bit special form: bit 0 reflects (1 - u), bit 1 is the identity.
// The two images sum to 1.
double mirror_1bit(double u, int bit);

// Dispatch used by the codec: the one-bit form when m == 1, the grid
// reflection otherwise.
double mirror_for(double u, int m, int symbol);

// Residual of the circular-shift identity
//   mirror(u,m,M) == (mirror(u,m,M*) + 2*(pivot(M) - pivot(M*))) mod 1.
// Returns the absolute difference between the two sides.
double shift_identity_residual(double u, int m, int symbol_a, int symbol_b);

}  // namespace mirrorwm
