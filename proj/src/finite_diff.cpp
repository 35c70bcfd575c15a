#include "mchain/finite_diff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mchain/errors.hpp"

namespace mchain {

Tensor finite_difference_grad(const ScalarFn& f, const Tensor& x, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_difference_grad: step must be positive");
  std::vector<double> probe(x.data().begin(), x.data().end());
  std::vector<double> grad(x.size());
  auto eval = [&](std::size_t i) {
    const double v = f(Tensor(x.shape(), probe));
    if (!std::isfinite(v)) {
      throw NumericError("finite_difference_grad: function is non-finite near element " + std::to_string(i));
    }
    return v;
  };
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + h;
    const double up = eval(i);
    probe[i] = orig - h;
    const double down = eval(i);
    probe[i] = orig;
    grad[i] = (up - down) / (2.0 * h);
  }
  return Tensor(x.shape(), std::move(grad));
}

double relative_error(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "relative_error");
  const double scale = std::max(norm2(a), norm2(b));
  if (scale < 1e-12) return 0.0;
  return norm2(a - b) / scale;
}

}  // namespace mchain
