#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mchain/nn.hpp"
#include "mchain/tensor.hpp"

namespace mchain {

/// Norms below this are treated as a degenerate direction.
inline constexpr double kDegenerateNorm = 1e-12;

/// <a, b> / (||a|| ||b||), or exactly 0 when either norm is below 1e-12.
double cosine(std::span<const double> a, std::span<const double> b);
double cosine(const Tensor& a, const Tensor& b);

struct EfficiencyReport {
  std::vector<double> per_node_cos;
  double epsilon_prime = 0.0;
  /// Supremum of the margins delta for which every node satisfies
  /// <z, d> > delta ||d||^2, when that supremum is positive.
  std::optional<double> delta_convex_at;

  double min_node_cos() const;
  double max_node_cos() const;
};

/// Efficiency indicator eps' = mean_l cos(z_l, -g_{x_l}). Rank-2 states are
/// evaluated per sample (row) and batch-averaged before the node average.
/// The delta-convexity margin is measured against
/// ideal_direction(z, g, eta) per sample.
EfficiencyReport epsilon_prime(const ChainTrace& trace, double eta = 0.01);

/// z - eta * mu * g with mu = 1 / max(1, ||g||).
Tensor ideal_direction(const Tensor& z, const Tensor& g, double eta);

enum class Distance { squared_euclidean, euclidean };

double distance(const Tensor& a, const Tensor& b, Distance kind);

/// l(x + eta d, y) <= l(x + eta z, y).
bool verify_ideal(const Tensor& x_prev, const Tensor& z, const Tensor& d, const Tensor& y, double eta,
                  Distance kind = Distance::squared_euclidean);

/// mu d + (1 - mu) z for mu in [0, 1].
Tensor lemma1_interpolate(const Tensor& d, const Tensor& z, double mu);

/// True iff <z_l, d_l> > delta ||d_l||^2 at every node.
bool delta_convex_check(std::span<const Tensor> zs, std::span<const Tensor> ds, double delta);

/// min_l <z_l, d_l> / ||d_l||^2 if positive; nullopt if some d_l vanishes or
/// the minimum is not positive.
std::optional<double> delta_convex_margin(std::span<const Tensor> zs, std::span<const Tensor> ds);

/// Mean cos(z_l, d_l) of a chain that must be delta-convex. Throws
/// std::invalid_argument when the chain is not delta-convex for `delta`.
double delta_convex_efficiency(std::span<const Tensor> zs, std::span<const Tensor> ds, double delta);

std::string efficiency_csv_header();
std::string efficiency_csv_row(long step, const EfficiencyReport& report);

}  // namespace mchain
