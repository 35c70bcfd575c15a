#include "properties.hpp"

#include <random>
#include <sstream>

#include "mchain/metrics.hpp"

namespace mchain::props {

namespace {

Tensor gaussian(std::mt19937_64& rng, std::size_t n, double scale) {
  std::normal_distribution<double> g(0.0, scale);
  std::vector<double> v(n);
  for (double& x : v) x = g(rng);
  return Tensor::vector(std::move(v));
}

}  // namespace

PropertyOutcome lemma1_suite(std::uint64_t seed, std::size_t cases) {
  PropertyOutcome out;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> dims(1, 8);
  std::uniform_real_distribution<double> etas(1e-3, 0.5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t c = 0; c < cases; ++c) {
    const std::size_t n = dims(rng);
    const Tensor x = gaussian(rng, n, 2.0);
    const Tensor y = gaussian(rng, n, 2.0);
    const Tensor z = gaussian(rng, n, 1.0);
    const double eta = etas(rng);
    const Tensor g = 2.0 * (x + eta * z - y);
    const Tensor d = ideal_direction(z, g, eta);
    ++out.cases;
    if (!verify_ideal(x, z, d, y, eta, Distance::squared_euclidean)) {
      ++out.failures;
      out.failure_notes.push_back("case " + std::to_string(c) + ": ideal direction did not verify");
      continue;
    }
    std::vector<double> mus = {0.0, 0.25, 0.5, 0.75, 1.0};
    for (int k = 0; k < 4; ++k) mus.push_back(unit(rng));
    for (double mu : mus) {
      if (!verify_ideal(x, z, lemma1_interpolate(d, z, mu), y, eta, Distance::squared_euclidean)) {
        ++out.failures;
        std::ostringstream note;
        note << "case " << c << ": interpolate mu=" << mu << " failed";
        out.failure_notes.push_back(note.str());
        break;
      }
    }
  }
  return out;
}

PropertyOutcome lemma2_suite(std::uint64_t seed, std::size_t cases) {
  PropertyOutcome out;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> dims(2, 8);
  std::uniform_int_distribution<std::size_t> lengths(1, 16);
  std::uniform_real_distribution<double> deltas(0.1, 0.9);
  std::uniform_real_distribution<double> slack(1e-3, 2.0);
  std::uniform_real_distribution<double> spread(0.0, 10.0);
  for (std::size_t c = 0; c < cases; ++c) {
    const std::size_t n = dims(rng);
    const std::size_t L = lengths(rng);
    const double delta = deltas(rng);
    std::vector<Tensor> zs, ds;
    for (std::size_t l = 0; l < L; ++l) {
      const Tensor d = gaussian(rng, n, 1.0);
      const Tensor w = gaussian(rng, n, 1.0);
      const Tensor w_perp = w - (dot(w, d) / dot(d, d)) * d;
      const double wn = norm2(w_perp);
      const Tensor w_scaled = wn > 0.0 ? (spread(rng) * norm2(d) / wn) * w_perp : w_perp;
      zs.push_back((delta + slack(rng)) * d + w_scaled);
      ds.push_back(d);
    }
    ++out.cases;
    if (!delta_convex_check(zs, ds, delta)) {
      ++out.failures;
      out.failure_notes.push_back("case " + std::to_string(c) + ": generated chain is not delta-convex");
      continue;
    }
    const double eps = delta_convex_efficiency(zs, ds, delta);
    if (!(eps > 0.0)) {
      ++out.failures;
      out.failure_notes.push_back("case " + std::to_string(c) + ": mean cosine " + std::to_string(eps));
    }
  }
  return out;
}

}  // namespace mchain::props
