#include "treecast/exact_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "treecast/errors.hpp"
#include "treecast/format.hpp"

namespace treecast {

namespace {

constexpr double kMassTolerance = 1e-12;

// Sorted atoms, merged within the tolerance. Group value is the
// probability-weighted mean so the first moment is preserved.
std::vector<Atom> merge_sorted(std::vector<Atom> atoms, double tolerance) {
  std::sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) {
    return a.value < b.value;
  });
  std::vector<Atom> out;
  out.reserve(atoms.size());
  std::size_t i = 0;
  while (i < atoms.size()) {
    const double start = atoms[i].value;
    double mass = 0.0;
    double weighted = 0.0;
    std::size_t j = i;
    for (; j < atoms.size() && atoms[j].value - start <= tolerance; ++j) {
      mass += atoms[j].prob;
      weighted += atoms[j].prob * atoms[j].value;
    }
    const double value = mass > 0.0 ? weighted / mass : start;
    out.push_back({std::clamp(value, 0.0, 1.0), mass});
    i = j;
  }
  return out;
}

double log_or_neg_inf(double v) {
  return v > 0.0 ? std::log(v) : -std::numeric_limits<double>::infinity();
}

// pi_a e^{la} / (pi_a e^{la} + pi_b e^{lb}), stable for infinite arguments.
double posterior(double pi_a, double la, double pi_b, double lb) {
  if (la == -std::numeric_limits<double>::infinity()) return 0.0;
  if (lb == -std::numeric_limits<double>::infinity()) return 1.0;
  return 1.0 / (1.0 + (pi_b / pi_a) * std::exp(lb - la));
}

double multiset_count(std::size_t kinds, int draws) {
  // C(kinds + draws - 1, draws) in floating point; only compared to a budget.
  double c = 1.0;
  for (int i = 1; i <= draws; ++i) {
    c *= static_cast<double>(kinds - 1 + i) / static_cast<double>(i);
  }
  return c;
}

struct ChildAtom {
  double log_a;   // log(1 + theta/pi1 (y - pi1))
  double log_b;   // log(1 - theta/pi2 (y - pi1))
  double log_q1;  // log P(Y = y | parent 1)
  double log_q2;  // log P(Y = y | parent 2)
};

class MultisetWalker {
 public:
  MultisetWalker(const ModelParams& p, std::vector<ChildAtom> kinds)
      : p_(p), kinds_(std::move(kinds)), log_fact_(p.d() + 1, 0.0) {
    for (int c = 1; c <= p.d(); ++c) {
      log_fact_[c] = log_fact_[c - 1] + std::log(static_cast<double>(c));
    }
  }

  void run(std::vector<Atom>& plus, std::vector<Atom>& minus,
           ProductMoments& products, std::size_t& count) {
    plus_ = &plus;
    minus_ = &minus;
    products_ = &products;
    count_ = &count;
    const double log_dfact = log_fact_[p_.d()];
    visit(0, p_.d(), 0.0, 0.0, log_dfact, log_dfact);
  }

 private:
  void visit(std::size_t first, int remaining, double lz1, double lz2,
             double lw1, double lw2) {
    if (remaining == 0) {
      const double w1 = std::exp(lw1);
      const double w2 = std::exp(lw2);
      plus_->push_back({posterior(p_.pi1(), lz1, p_.pi2(), lz2), w1});
      minus_->push_back({posterior(p_.pi2(), lz2, p_.pi1(), lz1), w2});
      products_->e_z1 += w1 * std::exp(lz1);
      products_->e_z2 += w1 * std::exp(lz2);
      ++*count_;
      return;
    }
    if (first == kinds_.size()) return;
    if (first + 1 == kinds_.size()) {
      take(first, remaining, remaining, lz1, lz2, lw1, lw2);
      return;
    }
    visit(first + 1, remaining, lz1, lz2, lw1, lw2);
    for (int c = 1; c <= remaining; ++c) {
      take(first, c, remaining, lz1, lz2, lw1, lw2);
    }
  }

  void take(std::size_t k, int copies, int remaining, double lz1, double lz2,
            double lw1, double lw2) {
    const ChildAtom& a = kinds_[k];
    const double c = static_cast<double>(copies);
    const double lfact = log_fact_[copies];
    const double next_lz1 = lz1 + c * a.log_a;
    const double next_lz2 = lz2 + c * a.log_b;
    const double next_lw1 = lw1 + c * a.log_q1 - lfact;
    const double next_lw2 = lw2 + c * a.log_q2 - lfact;
    visit(k + 1, remaining - copies, next_lz1, next_lz2, next_lw1, next_lw2);
  }

  const ModelParams& p_;
  std::vector<ChildAtom> kinds_;
  std::vector<double> log_fact_;
  std::vector<Atom>* plus_ = nullptr;
  std::vector<Atom>* minus_ = nullptr;
  ProductMoments* products_ = nullptr;
  std::size_t* count_ = nullptr;
};

}  // namespace

AtomDistribution::AtomDistribution(std::vector<Atom> atoms, int level)
    : level_(level) {
  std::vector<Atom> kept;
  kept.reserve(atoms.size());
  for (const Atom& a : atoms) {
    if (!std::isfinite(a.value) || !std::isfinite(a.prob) || a.prob < 0.0) {
      throw NonFinite("atom with invalid value or probability");
    }
    if (a.value < 0.0 || a.value > 1.0) {
      throw ConstraintViolation("atom value outside [0, 1]: " +
                                format_double(a.value));
    }
    if (a.prob < kPruneFloor) {
      pruned_mass_ += a.prob;
    } else {
      kept.push_back(a);
    }
  }
  if (pruned_mass_ >= kMassTolerance) {
    throw PrecisionLoss("pruned probability mass " +
                        format_double(pruned_mass_) + " exceeds 1e-12");
  }
  atoms_ = merge_sorted(std::move(kept), kMergeTolerance);
  double total = 0.0;
  for (const Atom& a : atoms_) total += a.prob;
  if (atoms_.empty() || std::abs(total - 1.0) > kMassTolerance) {
    throw PrecisionLoss("atom probabilities sum to " + format_double(total));
  }
}

AtomDistribution AtomDistribution::point_mass(double value, int level) {
  return AtomDistribution({{value, 1.0}}, level);
}

ExactLaws level_zero() {
  return {AtomDistribution::point_mass(1.0, 0),
          AtomDistribution::point_mass(1.0, 0)};
}

AtomDistribution child_law(const ModelParams& p, const AtomDistribution& plus,
                           const AtomDistribution& minus, int parent_state) {
  if (plus.level() != minus.level()) {
    throw LevelMismatch("plus and minus laws are at different levels");
  }
  const Channel2x2 m = transition_matrix(p);
  const int row = parent_state == 1 ? 0 : 1;
  const double to_one = m(row, 0);
  const double to_two = m(row, 1);
  std::vector<Atom> atoms;
  atoms.reserve(plus.size() + minus.size());
  for (const Atom& a : plus.atoms()) atoms.push_back({a.value, to_one * a.prob});
  for (const Atom& a : minus.atoms()) {
    atoms.push_back({1.0 - a.value, to_two * a.prob});
  }
  // Zero-weight atoms (noiseless rows) are dropped rather than pruned.
  std::erase_if(atoms, [](const Atom& a) { return a.prob == 0.0; });
  return AtomDistribution(std::move(atoms), plus.level());
}

RecursionResult recursion_step(const ModelParams& p,
                               const AtomDistribution& plus,
                               const AtomDistribution& minus,
                               std::size_t max_configurations) {
  if (plus.level() != minus.level()) {
    throw LevelMismatch("plus and minus laws are at different levels");
  }
  const Channel2x2 m = transition_matrix(p);

  // Joint support of Y: X+ atoms carry mass p+, reflected X- atoms p-.
  struct Support {
    double y;
    double from_plus;
    double from_minus;
  };
  std::vector<Support> raw;
  raw.reserve(plus.size() + minus.size());
  for (const Atom& a : plus.atoms()) raw.push_back({a.value, a.prob, 0.0});
  for (const Atom& a : minus.atoms()) raw.push_back({1.0 - a.value, 0.0, a.prob});
  std::sort(raw.begin(), raw.end(),
            [](const Support& a, const Support& b) { return a.y < b.y; });
  std::vector<Support> support;
  for (std::size_t i = 0; i < raw.size();) {
    Support s{0.0, 0.0, 0.0};
    double weighted = 0.0;
    std::size_t j = i;
    for (; j < raw.size() &&
           raw[j].y - raw[i].y <= AtomDistribution::kMergeTolerance;
         ++j) {
      s.from_plus += raw[j].from_plus;
      s.from_minus += raw[j].from_minus;
      weighted += (raw[j].from_plus + raw[j].from_minus) * raw[j].y;
    }
    s.y = weighted / (s.from_plus + s.from_minus);
    support.push_back(s);
    i = j;
  }

  const double budget = multiset_count(support.size(), p.d());
  if (budget > static_cast<double>(max_configurations)) {
    throw BudgetExceeded("exact recursion needs " + format_double(budget) +
                         " child configurations (budget " +
                         std::to_string(max_configurations) +
                         "); use density evolution instead");
  }

  const double t = p.theta();
  std::vector<ChildAtom> kinds;
  kinds.reserve(support.size());
  for (const Support& s : support) {
    const double centered = s.y - p.pi1();
    kinds.push_back({log_or_neg_inf(1.0 + t / p.pi1() * centered),
                     log_or_neg_inf(1.0 - t / p.pi2() * centered),
                     log_or_neg_inf(m.m11 * s.from_plus + m.m12 * s.from_minus),
                     log_or_neg_inf(m.m21 * s.from_plus + m.m22 * s.from_minus)});
  }

  std::vector<Atom> next_plus;
  std::vector<Atom> next_minus;
  const auto reserve = static_cast<std::size_t>(budget);
  next_plus.reserve(reserve);
  next_minus.reserve(reserve);
  RecursionResult result{level_zero(), {}, 0};
  MultisetWalker walker(p, std::move(kinds));
  walker.run(next_plus, next_minus, result.products, result.configurations);

  const int level = plus.level() + 1;
  result.laws = {AtomDistribution(std::move(next_plus), level),
                 AtomDistribution(std::move(next_minus), level)};
  return result;
}

std::vector<ExactLaws> exact_levels(const ModelParams& p, int n,
                                    std::size_t max_configurations) {
  std::vector<ExactLaws> levels;
  levels.push_back(level_zero());
  for (int k = 0; k < n; ++k) {
    const ExactLaws& cur = levels.back();
    levels.push_back(
        recursion_step(p, cur.plus, cur.minus, max_configurations).laws);
  }
  return levels;
}

ExactMoments moments(const AtomDistribution& plus,
                     const AtomDistribution& minus, const ModelParams& p) {
  if (plus.level() != minus.level()) {
    throw LevelMismatch("plus and minus laws are at different levels");
  }
  const double pi1 = p.pi1();
  const double pi2 = p.pi2();
  ExactMoments m;
  m.level = plus.level();
  m.x_n = plus.mean() - pi1;
  m.z_n = plus.expect([pi1](double v) { return (v - pi1) * (v - pi1); });
  m.e_x_minus = minus.mean() - pi2;
  const auto best = [](double v) { return std::max(v, 1.0 - v); };
  m.delta_n = pi1 * plus.expect(best) + pi2 * minus.expect(best);
  return m;
}

ExactMoments leaf_enumeration(const ModelParams& p, int n) {
  if (n < 0) throw ConstraintViolation("level must be non-negative");
  const double pi1 = p.pi1();
  const double pi2 = p.pi2();
  if (n == 0) return {0, pi2, pi2 * pi2, 1.0, pi1};

  std::uint64_t leaves = 1;
  for (int k = 0; k < n; ++k) {
    leaves *= static_cast<std::uint64_t>(p.d());
    if (leaves > 20) {
      throw BudgetExceeded("leaf enumeration limited to 2^20 configurations");
    }
  }
  const Channel2x2 m = transition_matrix(p);
  const std::uint64_t configs = std::uint64_t{1} << leaves;

  std::vector<double> l1(leaves);
  std::vector<double> l2(leaves);
  double sum_x = 0.0, sum_z = 0.0, sum_minus = 0.0, sum_delta = 0.0;
  for (std::uint64_t mask = 0; mask < configs; ++mask) {
    for (std::uint64_t leaf = 0; leaf < leaves; ++leaf) {
      const bool state_two = (mask >> leaf) & 1U;
      l1[leaf] = state_two ? 0.0 : 1.0;
      l2[leaf] = state_two ? 1.0 : 0.0;
    }
    // P(leaves below v | sigma_v = i), folded one level at a time.
    std::uint64_t width = leaves;
    while (width > 1) {
      const std::uint64_t parents = width / static_cast<std::uint64_t>(p.d());
      for (std::uint64_t v = 0; v < parents; ++v) {
        double a = 1.0;
        double b = 1.0;
        for (int j = 0; j < p.d(); ++j) {
          const std::uint64_t c = v * static_cast<std::uint64_t>(p.d()) + j;
          a *= m.m11 * l1[c] + m.m12 * l2[c];
          b *= m.m21 * l1[c] + m.m22 * l2[c];
        }
        l1[v] = a;
        l2[v] = b;
      }
      width = parents;
    }
    const double like1 = l1[0];
    const double like2 = l2[0];
    const double evidence = pi1 * like1 + pi2 * like2;
    if (evidence <= 0.0) continue;
    const double f1 = pi1 * like1 / evidence;
    const double f2 = 1.0 - f1;
    sum_x += like1 * f1;
    sum_z += like1 * (f1 - pi1) * (f1 - pi1);
    sum_minus += like2 * f2;
    sum_delta += evidence * std::max(f1, f2);
  }
  return {n, sum_x - pi1, sum_z, sum_delta, sum_minus - pi2};
}

double IdentityReport::max_abs_residual() const {
  double worst = 0.0;
  for (const auto& [name, r] : residuals) worst = std::max(worst, std::abs(r));
  return worst;
}

IdentityReport exact_identities(const ModelParams& p, const ExactLaws& laws) {
  const double pi1 = p.pi1();
  const double pi2 = p.pi2();
  const double t = p.theta();
  const double d = static_cast<double>(p.d());
  const ExactMoments m = moments(laws.plus, laws.minus, p);
  const auto sq_dev = [](double c) {
    return [c](double v) { return (v - c) * (v - c); };
  };

  IdentityReport report;
  auto& r = report.residuals;
  // X1 is X+ with probability pi1 and 1 - X- with probability pi2.
  const double e_x1 = pi1 * laws.plus.mean() + pi2 * (1.0 - laws.minus.mean());
  const double var_x1 = pi1 * laws.plus.expect(sq_dev(pi1)) +
                        pi2 * laws.minus.expect(sq_dev(pi2));
  r.emplace_back("E X1 = pi1", e_x1 - pi1);
  r.emplace_back("x = E(X1-pi1)^2/pi1", var_x1 / pi1 - m.x_n);
  r.emplace_back("x = z + (pi2/pi1) E(X- - pi2)^2",
                 m.z_n + pi2 / pi1 * laws.minus.expect(sq_dev(pi2)) - m.x_n);
  r.emplace_back("x = (pi2/pi1)(E X- - pi2)", pi2 / pi1 * m.e_x_minus - m.x_n);

  const AtomDistribution y = child_law(p, laws.plus, laws.minus, 1);
  r.emplace_back("E(Y-pi1) = theta x",
                 y.expect([pi1](double v) { return v - pi1; }) - t * m.x_n);
  r.emplace_back("E(Y-pi1)^2 = pi1 x + theta(z - pi1 x)",
                 y.expect(sq_dev(pi1)) -
                     (pi1 * m.x_n + t * (m.z_n - pi1 * m.x_n)));

  // Independence of the d children: E Z = (E factor)^d.
  const double ea = y.expect([&](double v) { return 1.0 + t / pi1 * (v - pi1); });
  const double eb = y.expect([&](double v) { return 1.0 - t / pi2 * (v - pi1); });
  r.emplace_back("(E a(Y))^d = (1 + theta^2 x/pi1)^d",
                 std::pow(ea, d) - std::pow(1.0 + t * t * m.x_n / pi1, d));
  r.emplace_back("(E b(Y))^d = (1 - theta^2 x/pi2)^d",
                 std::pow(eb, d) - std::pow(1.0 - t * t * m.x_n / pi2, d));

  report.mle_upper_slack = pi1 + std::sqrt(pi1 * m.x_n) - m.delta_n;
  report.mle_lower_slack = m.delta_n - (m.x_n + pi1);
  report.randomized_lower_slack =
      m.delta_n - (pi1 * pi1 + pi2 * pi2 + 2.0 * pi1 * m.x_n);
  report.z_slack = std::min(m.z_n, m.x_n - m.z_n);
  return report;
}

void append_product_identities(IdentityReport& report, const ModelParams& p,
                               const ExactMoments& m,
                               const ProductMoments& products) {
  const double t = p.theta();
  const double d = static_cast<double>(p.d());
  report.residuals.emplace_back(
      "E Z1 = (1 + theta^2 x/pi1)^d",
      products.e_z1 - std::pow(1.0 + t * t * m.x_n / p.pi1(), d));
  report.residuals.emplace_back(
      "E Z2 = (1 - theta^2 x/pi2)^d",
      products.e_z2 - std::pow(1.0 - t * t * m.x_n / p.pi2(), d));
}

double main_expansion_residual(const ModelParams& p, double x_n,
                               double x_next) {
  const double pi1 = p.pi1();
  const double pi2 = p.pi2();
  const double t2 = p.theta() * p.theta();
  const double d = static_cast<double>(p.d());
  const double quad = (1.0 - 6.0 * pi1 * pi2) / (pi1 * pi2 * pi2) *
                      (d * (d - 1.0) / 2.0) * t2 * t2 * x_n * x_n;
  return x_next - d * t2 * x_n - quad;
}

void write_atoms_csv(std::ostream& out, const AtomDistribution& dist) {
  out << "value,prob\n";
  for (const Atom& a : dist.atoms()) {
    out << format_double(a.value) << ',' << format_double(a.prob) << '\n';
  }
}

AtomDistribution read_atoms_csv(std::istream& in, int level) {
  std::string line;
  if (!std::getline(in, line) || line != "value,prob") {
    throw IOFailure("atom CSV must start with the header value,prob");
  }
  std::vector<Atom> atoms;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw IOFailure("malformed atom row: " + line);
    try {
      atoms.push_back({std::stod(line.substr(0, comma)),
                       std::stod(line.substr(comma + 1))});
    } catch (const std::exception&) {
      throw IOFailure("malformed atom row: " + line);
    }
  }
  return AtomDistribution(std::move(atoms), level);
}

}  // namespace treecast
