#include "sagnas/kendall.hpp"

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <vector>

namespace sagnas {

namespace {

std::vector<std::int64_t> quantize(std::span<const double> xs) {
  std::vector<std::int64_t> q;
  q.reserve(xs.size());
  for (double x : xs) {
    if (!std::isfinite(x)) throw std::invalid_argument("weighted_kendall_tau: non-finite accuracy");
    q.push_back(std::llround(x * 1e6));
  }
  return q;
}

}  // namespace

double weighted_kendall_tau(std::span<const double> subgraph, std::span<const double> full) {
  if (subgraph.size() != full.size()) throw std::invalid_argument("weighted_kendall_tau: length mismatch");
  if (subgraph.size() < 2) throw std::invalid_argument("weighted_kendall_tau: need at least two entries");
  const auto s = quantize(subgraph);
  const auto g = quantize(full);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    for (std::size_t k2 = k + 1; k2 < s.size(); ++k2) {
      const std::int64_t ds = s[k] - s[k2];
      const std::int64_t dg = g[k] - g[k2];
      double w;
      if (ds == 0 && dg == 0) {
        w = 1.0;
      } else if (std::llabs(ds) <= std::llabs(dg)) {
        w = static_cast<double>(ds) / static_cast<double>(dg);
      } else {
        w = static_cast<double>(dg) / static_cast<double>(ds);
      }
      num += w;
      den += std::abs(w);
    }
  }
  return den == 0.0 ? 0.0 : num / den;
}

}  // namespace sagnas
