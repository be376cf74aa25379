#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "treecast/model.hpp"

namespace treecast {

struct Atom {
  double value;
  double prob;
};

/// Finite law on [0, 1] stored as value-sorted atoms.
///
/// The constructor sorts, merges values closer than kMergeTolerance
/// (probability-weighted mean value, summed mass), prunes atoms lighter than
/// kPruneFloor and checks the result: total mass 1 within 1e-12, values in
/// [0, 1], pruned mass below 1e-12.
class AtomDistribution {
 public:
  static constexpr double kMergeTolerance = 1e-12;
  static constexpr double kPruneFloor = 1e-300;

  AtomDistribution(std::vector<Atom> atoms, int level);

  static AtomDistribution point_mass(double value, int level);

  std::span<const Atom> atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }
  int level() const { return level_; }
  double pruned_mass() const { return pruned_mass_; }

  template <typename F>
  double expect(F&& f) const {
    double acc = 0.0;
    for (const Atom& a : atoms_) acc += a.prob * f(a.value);
    return acc;
  }
  double mean() const {
    return expect([](double v) { return v; });
  }

 private:
  std::vector<Atom> atoms_;
  int level_;
  double pruned_mass_ = 0.0;
};

/// Exact law pair (X+(n), X-(n)).
struct ExactLaws {
  AtomDistribution plus;
  AtomDistribution minus;
};

struct ExactMoments {
  int level = 0;
  double x_n = 0.0;        // E X+ - pi1
  double z_n = 0.0;        // E (X+ - pi1)^2
  double delta_n = 0.0;    // E max{X1, X2}: ML reconstruction success
  double e_x_minus = 0.0;  // E X- - pi2
};

/// E Z1 and E Z2 given root state 1, accumulated over the enumerated child
/// configurations of one recursion step (they belong to the input level).
struct ProductMoments {
  double e_z1 = 0.0;
  double e_z2 = 0.0;
};

struct RecursionResult {
  ExactLaws laws;
  ProductMoments products;
  std::size_t configurations = 0;
};

/// X+(0) = X-(0) = point mass at 1.
ExactLaws level_zero();

/// Law of Y = f_n(1, subtree of a child) when the parent has state
/// `parent_state` (1 or 2): mixture of X+ (child in state 1) and 1 - X-
/// (child in state 2) with weights from the parent's row of M.
AtomDistribution child_law(const ModelParams& p, const AtomDistribution& plus,
                           const AtomDistribution& minus, int parent_state);

/// One exact step of the distributional recursion.
///
/// Enumerates all child configurations as multisets of Y atoms (multinomial
/// weights), evaluating Z1 = prod(1 + theta/pi1 (Y - pi1)) and
/// Z2 = prod(1 - theta/pi2 (Y - pi1)). Throws BudgetExceeded when the number
/// of multisets exceeds `max_configurations`.
RecursionResult recursion_step(const ModelParams& p,
                               const AtomDistribution& plus,
                               const AtomDistribution& minus,
                               std::size_t max_configurations);

/// Iterates recursion_step from level_zero up to level n.
std::vector<ExactLaws> exact_levels(const ModelParams& p, int n,
                                    std::size_t max_configurations);

ExactMoments moments(const AtomDistribution& plus,
                     const AtomDistribution& minus, const ModelParams& p);

/// Independent oracle: sums over all 2^(d^n) leaf configurations, computing
/// leaf likelihoods under each root state by upward marginalization over the
/// whole tree and the posterior by Bayes' rule. Budget: d^n <= 20 leaves.
ExactMoments leaf_enumeration(const ModelParams& p, int n);

/// Residuals of the exact identities tying x_n, z_n and the child law
/// together. Each entry is (name, lhs - rhs). The slacks are margins of
/// bounds on the ML success probability delta_n (negative means violated):
///   upper:       delta_n <= pi1 + sqrt(pi1 x_n)
///   lower:       delta_n >= x_n + pi1 (holds when pi1 = pi2; for pi1 > pi2
///                it can fail, see randomized_lower)
///   randomized:  delta_n >= pi1^2 + pi2^2 + 2 pi1 x_n, the success
///                probability of guessing the root from the posterior.
struct IdentityReport {
  std::vector<std::pair<std::string, double>> residuals;
  double mle_upper_slack = 0.0;
  double mle_lower_slack = 0.0;
  double randomized_lower_slack = 0.0;
  double z_slack = 0.0;  // min(z_n, x_n - z_n)

  double max_abs_residual() const;
};

IdentityReport exact_identities(const ModelParams& p, const ExactLaws& laws);

/// Adds the product identities E Z1 = (1 + theta^2 x_n / pi1)^d and
/// E Z2 = (1 - theta^2 x_n / pi2)^d for an enumerated step.
void append_product_identities(IdentityReport& report, const ModelParams& p,
                               const ExactMoments& m,
                               const ProductMoments& products);

/// x_{n+1} - d theta^2 x_n
///   - (1 - 6 pi1 pi2)/(pi1 pi2^2) * d(d-1)/2 * theta^4 x_n^2.
double main_expansion_residual(const ModelParams& p, double x_n,
                               double x_next);

void write_atoms_csv(std::ostream& out, const AtomDistribution& dist);
AtomDistribution read_atoms_csv(std::istream& in, int level);

}  // namespace treecast
