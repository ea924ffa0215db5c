#include "stpp/moments.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

namespace stpp {

namespace {

void check_order(std::size_t n, int cap) {
  if (n < 1 || n > static_cast<std::size_t>(cap))
    throw std::out_of_range("partition order must be in [1, " + std::to_string(cap) + "], got " +
                            std::to_string(n));
}

std::vector<SpacetimePoint> gather(std::span<const SpacetimePoint> points, std::uint32_t mask) {
  std::vector<SpacetimePoint> out;
  out.reserve(static_cast<std::size_t>(std::popcount(mask)));
  for (std::size_t i = 0; i < points.size(); ++i)
    if (mask & (1u << i)) out.push_back(points[i]);
  return out;
}

}  // namespace

std::uint64_t bell_number(int n) {
  if (n < 0) throw std::out_of_range("bell_number: negative order");
  // Bell triangle.
  std::vector<std::uint64_t> row{1};
  for (int i = 0; i < n; ++i) {
    std::vector<std::uint64_t> next{row.back()};
    for (auto v : row) next.push_back(next.back() + v);
    row = std::move(next);
  }
  return row.front();
}

std::vector<SetPartition> enumerate_partitions(int n) {
  check_order(static_cast<std::size_t>(n), kMaxPartitionOrder);
  std::vector<SetPartition> out;
  out.reserve(bell_number(n));
  // Restricted growth strings a[0] = 0, a[i] <= 1 + max(a[0..i-1]).
  std::vector<int> a(static_cast<std::size_t>(n), 0), prefix_max(static_cast<std::size_t>(n), 0);
  while (true) {
    SetPartition p(static_cast<std::size_t>(prefix_max.back() + 1));
    for (int i = 0; i < n; ++i) p[static_cast<std::size_t>(a[i])].push_back(i);
    out.push_back(std::move(p));
    int i = n - 1;
    while (i > 0 && a[i] > prefix_max[i - 1]) --i;
    if (i == 0) break;
    ++a[i];
    prefix_max[i] = std::max(prefix_max[i - 1], a[i]);
    for (int j = i + 1; j < n; ++j) {
      a[j] = 0;
      prefix_max[j] = prefix_max[i];
    }
  }
  return out;
}

double xi_to_normalized_density(std::span<const SpacetimePoint> points, const SubtupleFunction& xi) {
  check_order(points.size(), kMaxPartitionOrder);
  double total = 0.0;
  for (const auto& partition : enumerate_partitions(static_cast<int>(points.size()))) {
    double term = 1.0;
    for (const auto& block : partition) {
      if (block.size() == 1) continue;
      std::vector<SpacetimePoint> sub;
      sub.reserve(block.size());
      for (int i : block) sub.push_back(points[static_cast<std::size_t>(i)]);
      term *= xi(sub);
    }
    total += term;
  }
  return total;
}

double normalized_density_to_xi(std::span<const SpacetimePoint> points,
                                const SubtupleFunction& rho_norm) {
  check_order(points.size(), kMaxPartitionOrder);
  const auto n = points.size();
  const std::uint32_t full = (1u << n) - 1;
  std::vector<double> rho(full + 1, std::nan("")), xi(full + 1, std::nan(""));
  rho[0] = 1.0;

  auto rho_of = [&](std::uint32_t mask) {
    if (std::isnan(rho[mask])) rho[mask] = std::popcount(mask) == 1 ? 1.0 : rho_norm(gather(points, mask));
    return rho[mask];
  };
  std::function<double(std::uint32_t)> xi_of = [&](std::uint32_t mask) -> double {
    if (!std::isnan(xi[mask])) return xi[mask];
    if (std::popcount(mask) == 1) return xi[mask] = 1.0;
    const std::uint32_t low = mask & (~mask + 1);
    const std::uint32_t rest = mask ^ low;
    double value = rho_of(mask);
    // Proper sub-blocks B = low | sub with sub a proper subset of rest.
    for (std::uint32_t sub = (rest - 1) & rest;; sub = (sub - 1) & rest) {
      const std::uint32_t block = low | sub;
      value -= xi_of(block) * rho_of(mask ^ block);
      if (sub == 0) break;
    }
    return xi[mask] = value;
  };
  return xi_of(full);
}

double lgcp_normalized_density(std::span<const SpacetimePoint> points, const CovarianceModel& cov) {
  double s = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = i + 1; j < points.size(); ++j)
      s += cov(spatial_distance(points[i], points[j]), points[i].time - points[j].time);
  return std::exp(s);
}

double lgcp_xi(std::span<const SpacetimePoint> points, const CovarianceModel& cov) {
  check_order(points.size(), 6);
  return normalized_density_to_xi(points, [&cov](std::span<const SpacetimePoint> sub) {
    return lgcp_normalized_density(sub, cov);
  });
}

}  // namespace stpp
