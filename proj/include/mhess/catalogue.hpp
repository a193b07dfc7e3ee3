#pragma once

#include <limits>
#include <random>
#include <vector>

#include "mhess/differentiation.hpp"
#include "mhess/grid.hpp"

// Analytic test fields on the torus and a random generator of cone-valid
// fields.

namespace mhess {

/// Stand-in for -infinity in fields with a logarithmic pole.
inline constexpr double kNegativeSentinel = std::numeric_limits<double>::lowest();

inline bool is_sentinel(double v) { return v == kNegativeSentinel; }

/// amplitude * prod_a cos(2 pi k_a x_a + phase_a); axes with k_a = 0 and
/// phase 0 contribute a factor 1.
struct CosineTerm {
  double amplitude = 0.0;
  std::vector<int> frequencies;   // one per real axis
  std::vector<double> phases;     // optional, radians
};

ScalarField cosine_field(const TorusGrid& g, const std::vector<CosineTerm>& terms, double offset = 0.0);

/// Periodic squared distance sum_a sin^2(pi (x_a - c_a)) / pi^2 to a center.
Field periodic_distance_sq(const TorusGrid& g, const std::vector<double>& center);

/// amplitude * exp(-d^2 / (2 r^2)) with the periodic distance above.
ScalarField gaussian_bump(const TorusGrid& g, const std::vector<double>& center, double radius,
                          double amplitude);

/// (epsilon / 2) * log d^2 with the periodic distance: epsilon times the log
/// of the distance to the center, a sentinel at the center point itself.
ScalarField log_singular(const TorusGrid& g, const std::vector<double>& center, double epsilon);

/// Normalized sum of Gaussian bumps plus a floor, integrating to one.
struct Bump {
  std::vector<double> center;
  double radius = 0.1;
  double weight = 1.0;
};
DensityField bump_density(const TorusGrid& g, const std::vector<Bump>& bumps, double floor);

/// Random band-limited field whose densities h_1..h_m stay above `margin`.
/// Frequencies are bounded by `max_frequency` along every axis; the amplitude
/// is drawn and halved until the margin holds.
ScalarField random_cone_valid(const Differentiator& d, int m, std::mt19937_64& rng,
                              double margin = 0.1, int max_frequency = 2, int terms = 6);

/// Random band-limited field normalized to unit sup norm (no cone condition).
ScalarField random_smooth(const TorusGrid& g, std::mt19937_64& rng, int max_frequency = 2,
                          int terms = 6);

}  // namespace mhess
