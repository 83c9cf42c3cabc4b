#include "lqpg/problems.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lqpg/error.hpp"
#include "lqpg/rng.hpp"

namespace lqpg {

std::string_view to_string(Family family) {
  switch (family) {
    case Family::kMassSpring: return "mass_spring";
    case Family::kAircraft: return "aircraft";
    case Family::kRandomHurwitz: return "random_hurwitz";
    case Family::kScalar: return "scalar";
  }
  return "mass_spring";
}

Family parse_family(std::string_view name) {
  if (name == "mass_spring") return Family::kMassSpring;
  if (name == "aircraft") return Family::kAircraft;
  if (name == "random_hurwitz") return Family::kRandomHurwitz;
  if (name == "scalar") return Family::kScalar;
  throw ValidationError("unknown family '" + std::string(name) +
                        "' (expected mass_spring|aircraft|random_hurwitz|scalar)");
}

ProblemInstance make_mass_spring(int g) {
  if (g < 1) throw ValidationError("mass_spring needs g >= 1");
  const Eigen::Index gi = g;
  Matrix t = Matrix::Zero(gi, gi);
  for (Eigen::Index i = 0; i < gi; ++i) {
    t(i, i) = 2.0;
    if (i + 1 < gi) {
      t(i, i + 1) = -1.0;
      t(i + 1, i) = -1.0;
    }
  }
  Matrix a = Matrix::Zero(2 * gi, 2 * gi);
  a.topRightCorner(gi, gi) = Matrix::Identity(gi, gi);
  a.bottomLeftCorner(gi, gi) = -t;
  a.bottomRightCorner(gi, gi) = -t;
  Matrix b = Matrix::Zero(2 * gi, gi);
  b.bottomRows(gi) = Matrix::Identity(gi, gi);
  Matrix q = Matrix::Identity(2 * gi, 2 * gi);
  q(0, 0) += 100.0;
  Matrix r = Matrix::Identity(gi, gi);
  if (gi >= 2) r(1, 1) += 4.0;
  return ProblemInstance::create(std::move(a), std::move(b), std::move(q), std::move(r));
}

ProblemInstance make_aircraft() {
  Matrix a(2, 2);
  a << 0.0, 1.0, 0.0, -0.5;
  Matrix b(2, 1);
  b << 0.0, 1.0;
  Matrix q = Matrix::Zero(2, 2);
  q(0, 0) = 10.0;
  q(1, 1) = 1.0;
  Matrix r(1, 1);
  r << 0.1;
  return ProblemInstance::create(std::move(a), std::move(b), std::move(q), std::move(r));
}

ProblemInstance make_scalar() {
  Matrix a(1, 1), b(1, 1), q(1, 1), r(1, 1);
  a << -1.0;
  b << 1.0;
  q << 1.0;
  r << 1.0;
  return ProblemInstance::create(std::move(a), std::move(b), std::move(q), std::move(r));
}

Matrix random_hurwitz_matrix(int n, std::uint64_t seed, double abscissa) {
  if (n < 1) throw ValidationError("n must be >= 1");
  if (!(abscissa < 0.0)) throw ValidationError("spectral abscissa must be negative");
  Rng rng(seed);
  Matrix g = rng.normal_matrix(n, n) * (0.5 / std::sqrt(static_cast<double>(n)));
  const double current = eigenvalues(g).real().maxCoeff();
  g.diagonal().array() += abscissa - current;
  return g;
}

Matrix random_spd(int n, std::uint64_t seed) {
  if (n < 1) throw ValidationError("n must be >= 1");
  Rng rng(seed);
  const Matrix g = rng.normal_matrix(n, n);
  return symmetrize(g * g.transpose() / static_cast<double>(n) + Matrix::Identity(n, n));
}

ProblemInstance make_random_hurwitz(int n, std::uint64_t seed) {
  const Matrix a = random_hurwitz_matrix(n, sub_seed(seed, 0));
  const int m = std::max(1, n / 2);
  Rng rng(sub_seed(seed, 1));
  Matrix b = rng.normal_matrix(n, m);
  return ProblemInstance::create(a, std::move(b), Matrix::Identity(n, n),
                                 Matrix::Identity(m, m));
}

int state_dimension(Family family, int size) {
  switch (family) {
    case Family::kMassSpring: return 2 * size;
    case Family::kAircraft: return 2;
    case Family::kRandomHurwitz: return size;
    case Family::kScalar: return 1;
  }
  return size;
}

ProblemInstance make_problem(Family family, int size, std::uint64_t seed) {
  switch (family) {
    case Family::kMassSpring: return make_mass_spring(size);
    case Family::kAircraft: return make_aircraft();
    case Family::kRandomHurwitz: return make_random_hurwitz(size, seed);
    case Family::kScalar: return make_scalar();
  }
  throw ValidationError("unknown family");
}

}  // namespace lqpg
