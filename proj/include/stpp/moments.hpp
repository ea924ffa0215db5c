#pragma once

// Set-partition expansion linking intensity-normalised product densities
// rho^(n) / prod lambda to n-point correlation functions xi_n:
//
//   rho^(n) / prod lambda = sum over partitions {D_1..D_k} of prod_j xi_{|D_j|}
//
// with xi_1 == 1.

#include "stpp/covariance.hpp"
#include "stpp/geometry.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace stpp {

/// Blocks of 0-based indices; blocks ordered by their smallest element.
using SetPartition = std::vector<std::vector<int>>;

inline constexpr int kMaxPartitionOrder = 10;

std::uint64_t bell_number(int n);

/// All partitions of {0..n-1}, ordered lexicographically by restricted
/// growth string. 1 <= n <= 10.
std::vector<SetPartition> enumerate_partitions(int n);

/// A symmetric function of a point sub-tuple (xi_k or rho^(k)/prod lambda).
using SubtupleFunction = std::function<double(std::span<const SpacetimePoint>)>;

/// Sum over all Bell(n) partitions of prod xi_{|D_j|}. xi is never called
/// on single points (xi_1 == 1).
double xi_to_normalized_density(std::span<const SpacetimePoint> points, const SubtupleFunction& xi);

/// Inverse of the expansion: xi_n from the normalised densities of every
/// sub-tuple, by recursion on the block containing the first point,
///   xi(S) = rho(S) - sum_{B : min S in B, B != S} xi(B) rho(S \ B),
/// memoised per subset within the call.
double normalized_density_to_xi(std::span<const SpacetimePoint> points,
                                const SubtupleFunction& rho_norm);

/// exp{ sum_{i<j} C((x_i,t_i) - (x_j,t_j)) }.
double lgcp_normalized_density(std::span<const SpacetimePoint> points, const CovarianceModel& cov);

/// xi_n of a log-Gaussian Cox process (n <= 6).
double lgcp_xi(std::span<const SpacetimePoint> points, const CovarianceModel& cov);

}  // namespace stpp
