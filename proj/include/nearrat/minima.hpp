#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nearrat/matrix.hpp"

namespace nearrat {

struct MinimaOptions {
  // Enumeration tree nodes allowed across all k minima.
  std::int64_t node_budget = 50'000'000;
  // Basis condition number above which a warning is attached.
  double cond_warn = 1e12;
  double det_tol = 1e-12;
};

struct MinimaResult {
  std::vector<double> minima;                          // delta_1 <= ... <= delta_k
  std::vector<std::vector<std::int64_t>> coefficients;  // in the input basis
  std::vector<std::vector<double>> vectors;
  std::int64_t nodes = 0;
  double condition = 1.0;
  std::vector<std::string> warnings;
};

// Euclidean successive minima of the lattice spanned by the columns of basis
// (k <= 8). LLL preprocessing, then for each i a Schnorr-Euchner search for
// the shortest vector outside the span of the first i-1 minima, run on a basis
// whose leading block generates the lattice points of that span.
MinimaResult successive_minima(const Matrix<double>& basis, const MinimaOptions& opt = {});

double delta1(const Matrix<double>& basis, const MinimaOptions& opt = {});
double delta_last(const Matrix<double>& basis, const MinimaOptions& opt = {});

// LLL-reduces the columns in place (delta = 0.99); returns the unimodular
// transform U with reduced = basis * U.
std::vector<std::vector<std::int64_t>> lll_reduce(Matrix<long double>& basis, double delta = 0.99);

// Volume of the Euclidean unit ball in R^k.
double unit_ball_volume(int k);

}  // namespace nearrat
