#pragma once

#include <span>
#include <vector>

namespace bohm {

/**
 * Normalized oscillator eigenfunctions psi_0(x) .. psi_{n_max}(x) for unit
 * mass and hbar, evaluated by the three-term recurrence on psi_n itself:
 *
 *   psi_{n+1} = sqrt(2w/(n+1)) x psi_n - sqrt(n/(n+1)) psi_{n-1}
 *
 * Hermite polynomials and factorials are never formed explicitly. The
 * recurrence runs on a rescaled row with a tracked exponent, so the result
 * is finite (possibly zero by underflow) for n_max up to a few hundred and
 * |x| up to ~50.
 */
std::vector<double> eigenfunction_row(double x, double omega, int n_max);

/**
 * Same recurrence without the Gaussian factor exp(-w x^2 / 2): fills
 * out[n] = psi_n(x) * exp(w x^2 / 2) for n = 0 .. out.size()-1.
 * Returns false if a value left the finite range.
 */
bool scaled_eigenfunction_row(double x, double omega, std::span<double> out);

}  // namespace bohm
