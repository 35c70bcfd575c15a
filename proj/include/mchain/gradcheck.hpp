#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace mchain {

struct GradcheckEntry {
  std::string name;
  std::size_t cases = 0;
  /// Worst relative error against central differences, or, for hook
  /// entries, the number of elements where g_z != g_x + tau * z bitwise.
  double max_error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

struct GradcheckReport {
  std::vector<GradcheckEntry> entries;
  bool passed() const;
};

inline constexpr double kGradcheckStep = 1e-6;
inline constexpr double kGradcheckTolerance = 1e-5;

/// Finite-difference check of every tape primitive and of the toy model
/// (plain, skip, markov with tau = 0), `cases` seeded cases each, plus the
/// exact penal-connection identity on a markov model with tau > 0.
GradcheckReport run_gradcheck(std::uint64_t seed = 0, std::size_t cases = 20);

std::string format_gradcheck(const GradcheckReport& report);

}  // namespace mchain
