#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "mcbif/band_matrix.hpp"

namespace mcbif {

class EigenBreakdownError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct PencilOptions {
    std::size_t extra = 4;        // block size = m + extra
    double eig_tol = 1e-12;       // relative change of Ritz values
    double res_tol = 1e-10;       // relative residual target
    std::size_t max_iter = 2000;
    std::size_t stagnation_iter = 6; // accept after this many stalled sweeps
    double stall_eig_tol = 1e-9;
    std::uint64_t seed = 0x6d636269;
    std::vector<std::vector<double>> warm; // optional initial vectors
};

struct PencilResult {
    std::vector<double> values;               // ascending positive eigenvalues
    std::vector<std::vector<double>> vectors; // K-normalized: v^T K v = 1
    std::vector<std::vector<long double>> vectors_ext; // the same, unrounded
    std::vector<double> residuals;            // relative, dual quadrature norm
    // the same residuals after the vectors are rounded to double; larger than
    // `residuals` when K has a wide dynamic range (high-order X Grams)
    std::vector<double> stored_residuals;
    std::size_t negative_mass_directions = 0;
    std::size_t iterations = 0;
    bool residual_target_met = false;
};

/// m smallest positive eigenvalues of K v = lambda B v with K symmetric
/// positive definite and B symmetric (possibly indefinite).
///
/// Block inverse iteration v <- K^{-1} B v with Rayleigh-Ritz in the
/// K-inner product: mu = 1/lambda are eigenvalues of V^T B V, so the wanted
/// pairs are the largest positive mu. `quad_w` defines the dual norm used for
/// residuals: |r| = sqrt(sum r_i^2 / quad_w_i).
///
/// All arithmetic is carried out in long double. Iteration stops when the
/// Ritz values settle and the residuals reach `res_tol`, or when the values
/// have settled to `stall_eig_tol` and the residuals stop improving for
/// `stagnation_iter` sweeps (residual_target_met is then false).
PencilResult solve_pencil(const BandMatrixLD& K, const BandMatrixLD& B, std::size_t m,
                          std::span<const double> quad_w, const PencilOptions& opt = {});

double weighted_dual_norm(std::span<const double> r, std::span<const double> quad_w);

} // namespace mcbif
