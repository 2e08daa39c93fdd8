#pragma once

#include "hplk/matrix.hpp"

namespace hplk {

// modified Bessel I_k(x) by the ascending series, |x| <= 50; I_{-k} = I_k
cplx bessel_I(int k, cplx x);
// Bessel J_k(x) by the ascending series, |x| <= 50 (accuracy degrades past |x| ~ 25)
double bessel_J(int k, double x);
// j-th positive zero of J_k, bracketed on a grid and bisected to the given relative width
double bessel_j_zero(int k, int j, double resolution = 1e-15);

}  // namespace hplk
