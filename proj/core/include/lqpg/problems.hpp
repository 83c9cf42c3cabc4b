#pragma once

#include <cstdint>
#include <string_view>

#include "lqpg/lqr.hpp"

namespace lqpg {

enum class Family { kMassSpring, kAircraft, kRandomHurwitz, kScalar };

std::string_view to_string(Family family);
Family parse_family(std::string_view name);

/// g masses in a chain: n = 2g, m = g, A = [[0, I], [−T, −T]] with T the
/// tridiagonal (−1, 2, −1) matrix, B = [0; I], Q = I + 100·e₁e₁ᵀ,
/// R = I + 4·e₂e₂ᵀ. For g = 1 the e₂ term has no room in R and is dropped.
ProblemInstance make_mass_spring(int g);

/// Pitch-angle model A = [[0, 1], [0, −0.5]], B = [0, 1]ᵀ, Q = diag(10, 1), R = 0.1.
ProblemInstance make_aircraft();

/// a = −1, b = q = r = 1. K* = √2 − 1.
ProblemInstance make_scalar();

/// Random Hurwitz A from random_hurwitz_matrix, B standard normal with
/// m = max(1, n/2) columns, Q = I, R = I.
ProblemInstance make_random_hurwitz(int n, std::uint64_t seed);

/// 0.5·G/√n for standard normal G, shifted along the identity so that the
/// spectral abscissa equals `abscissa`.
Matrix random_hurwitz_matrix(int n, std::uint64_t seed, double abscissa = -1.0);

/// G Gᵀ/n + I for standard normal G.
Matrix random_spd(int n, std::uint64_t seed);

/// Dimension of the state for a family at size parameter g (or n).
int state_dimension(Family family, int size);

ProblemInstance make_problem(Family family, int size, std::uint64_t seed);

}  // namespace lqpg
