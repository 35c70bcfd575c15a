#include "mchain/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mchain/errors.hpp"
#include "mchain/format.hpp"

namespace mchain {

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("cosine: length mismatch");
  const double na = norm2(a);
  const double nb = norm2(b);
  if (na < kDegenerateNorm || nb < kDegenerateNorm) return 0.0;
  return dot(a, b) / (na * nb);
}

double cosine(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "cosine");
  return cosine(a.data(), b.data());
}

double EfficiencyReport::min_node_cos() const {
  return per_node_cos.empty() ? 0.0 : *std::min_element(per_node_cos.begin(), per_node_cos.end());
}

double EfficiencyReport::max_node_cos() const {
  return per_node_cos.empty() ? 0.0 : *std::max_element(per_node_cos.begin(), per_node_cos.end());
}

namespace {

// Splits a state tensor into per-sample rows; rank-1 tensors are one sample.
std::vector<std::span<const double>> samples(const Tensor& t) {
  if (t.rank() != 2) return {t.data()};
  const std::size_t rows = t.shape()[0];
  const std::size_t cols = t.shape()[1];
  std::vector<std::span<const double>> out;
  out.reserve(rows);
  for (std::size_t r = 0; r < rows; ++r) out.push_back(t.data().subspan(r * cols, cols));
  return out;
}

}  // namespace

EfficiencyReport epsilon_prime(const ChainTrace& trace, double eta) {
  if (trace.nodes.empty()) throw std::invalid_argument("epsilon_prime: empty chain");
  if (!trace.complete()) throw std::invalid_argument("epsilon_prime: trace has nodes without g_x (run backward first)");

  EfficiencyReport report;
  double margin = std::numeric_limits<double>::infinity();
  bool degenerate = false;
  for (const auto& node : trace.nodes) {
    require_same_shape(node.z_value, *node.g_x_value, "epsilon_prime");
    const auto zs = samples(node.z_value);
    const auto gs = samples(*node.g_x_value);
    double acc = 0.0;
    for (std::size_t s = 0; s < zs.size(); ++s) {
      const std::size_t n = zs[s].size();
      std::vector<double> neg_g(n);
      for (std::size_t i = 0; i < n; ++i) neg_g[i] = -gs[s][i];
      acc += cosine(zs[s], neg_g);

      // d = z - eta * mu * g, mu = 1 / max(1, ||g||)
      const double mu = 1.0 / std::max(1.0, norm2(gs[s]));
      std::vector<double> d(n);
      for (std::size_t i = 0; i < n; ++i) d[i] = zs[s][i] - eta * mu * gs[s][i];
      const double dd = dot(d, d);
      if (dd <= 0.0) {
        degenerate = true;
      } else {
        margin = std::min(margin, dot(zs[s], d) / dd);
      }
    }
    report.per_node_cos.push_back(acc / static_cast<double>(zs.size()));
  }
  double sum = 0.0;
  for (double c : report.per_node_cos) sum += c;
  report.epsilon_prime = sum / static_cast<double>(report.per_node_cos.size());
  if (!degenerate && margin > 0.0) report.delta_convex_at = margin;
  return report;
}

Tensor ideal_direction(const Tensor& z, const Tensor& g, double eta) {
  require_same_shape(z, g, "ideal_direction");
  if (!(eta > 0.0)) throw std::invalid_argument("ideal_direction: eta must be positive");
  const double mu = 1.0 / std::max(1.0, norm2(g));
  return z - (eta * mu) * g;
}

double distance(const Tensor& a, const Tensor& b, Distance kind) {
  require_same_shape(a, b, "distance");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return kind == Distance::squared_euclidean ? s : std::sqrt(s);
}

bool verify_ideal(const Tensor& x_prev, const Tensor& z, const Tensor& d, const Tensor& y, double eta, Distance kind) {
  require_same_shape(x_prev, z, "verify_ideal");
  require_same_shape(x_prev, d, "verify_ideal");
  require_same_shape(x_prev, y, "verify_ideal");
  return distance(x_prev + eta * d, y, kind) <= distance(x_prev + eta * z, y, kind);
}

Tensor lemma1_interpolate(const Tensor& d, const Tensor& z, double mu) {
  require_same_shape(d, z, "lemma1_interpolate");
  if (!(mu >= 0.0 && mu <= 1.0)) throw std::invalid_argument("lemma1_interpolate: mu must lie in [0, 1]");
  std::vector<double> out(d.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = mu * d[i] + (1.0 - mu) * z[i];
  return Tensor(d.shape(), std::move(out));
}

namespace {

void require_pairs(std::span<const Tensor> zs, std::span<const Tensor> ds, const char* what) {
  if (zs.size() != ds.size()) {
    throw std::invalid_argument(std::string(what) + ": " + std::to_string(zs.size()) + " predicted directions vs " +
                                std::to_string(ds.size()) + " ideal directions");
  }
}

}  // namespace

bool delta_convex_check(std::span<const Tensor> zs, std::span<const Tensor> ds, double delta) {
  require_pairs(zs, ds, "delta_convex_check");
  if (!(delta > 0.0)) throw std::invalid_argument("delta_convex_check: delta must be positive");
  for (std::size_t l = 0; l < zs.size(); ++l) {
    if (!(dot(zs[l], ds[l]) > delta * dot(ds[l], ds[l]))) return false;
  }
  return true;
}

std::optional<double> delta_convex_margin(std::span<const Tensor> zs, std::span<const Tensor> ds) {
  require_pairs(zs, ds, "delta_convex_margin");
  if (zs.empty()) return std::nullopt;
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l < zs.size(); ++l) {
    const double dd = dot(ds[l], ds[l]);
    if (dd <= 0.0) return std::nullopt;
    margin = std::min(margin, dot(zs[l], ds[l]) / dd);
  }
  if (margin > 0.0) return margin;
  return std::nullopt;
}

double delta_convex_efficiency(std::span<const Tensor> zs, std::span<const Tensor> ds, double delta) {
  if (!delta_convex_check(zs, ds, delta)) {
    throw std::invalid_argument("delta_convex_efficiency: chain is not delta-convex for the given delta");
  }
  if (zs.empty()) throw std::invalid_argument("delta_convex_efficiency: empty chain");
  double sum = 0.0;
  for (std::size_t l = 0; l < zs.size(); ++l) sum += cosine(zs[l], ds[l]);
  return sum / static_cast<double>(zs.size());
}

std::string efficiency_csv_header() { return "step,epsilon_prime,min_node_cos,max_node_cos,delta_convex_at"; }

std::string efficiency_csv_row(long step, const EfficiencyReport& r) {
  return std::to_string(step) + ',' + format_double(r.epsilon_prime) + ',' + format_double(r.min_node_cos()) + ',' +
         format_double(r.max_node_cos()) + ',' + (r.delta_convex_at ? format_double(*r.delta_convex_at) : "none");
}

}  // namespace mchain
