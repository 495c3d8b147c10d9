#pragma once

// Serialization of retained draws.
//
// Binary layout (little-endian):
//   magic "CRVARCH1" (8 bytes)
//   u32 d, u32 p (largest order over draws), u32 r (largest final rank),
//   u32 n_keep, u32 has_coefficients
//   then n_keep draw blocks:
//     f64 lambda
//     f64[d*d] Ω row-major
//     f64[d*d] Σ row-major
//     if has_coefficients: u32 order, then order blocks f64[d*d] A_k row-major
//
// CSV: header draw,lambda,omega_i_j (i ≤ j),sigma_i_j (i ≤ j), 1-based
// indices, one row per draw, values printed with 17 significant digits.

#include <string>

#include "crvar/sampler.hpp"

namespace crvar {

struct StoredDraws {
  int d = 0;
  int p = 0;
  int r = 0;
  std::vector<double> lambda;
  std::vector<MatrixXd> omega;
  std::vector<MatrixXd> sigma;
  std::vector<std::vector<MatrixXd>> A;
};

void write_chain_binary(const std::string& path, const ChainOutput& chain);
StoredDraws read_chain_binary(const std::string& path);
void write_chain_csv(const std::string& path, const ChainOutput& chain);

/// Draws as stored in a ChainOutput, for comparison with read_chain_binary.
StoredDraws stored_draws(const ChainOutput& chain);

}  // namespace crvar
