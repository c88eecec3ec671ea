#include "mgt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace mgt {

namespace {

void split_by_label(std::span<const double> scores, std::span<const Label> labels,
                    std::vector<double>& machine, std::vector<double>& human) {
  if (scores.size() != labels.size()) throw MetricError("scores and labels differ in length");
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) throw MetricError("non-finite score");
    (labels[i] == Label::machine ? machine : human).push_back(scores[i]);
  }
  if (machine.empty() || human.empty()) throw MetricError("metric needs both labels");
}

}  // namespace

double auroc(std::span<const double> scores, std::span<const Label> labels) {
  std::vector<double> machine, human;
  split_by_label(scores, labels, machine, human);
  std::sort(human.begin(), human.end());
  // wins + ties/2, counted per machine score with two binary searches
  double total = 0.0;
  for (double m : machine) {
    const auto lo = std::lower_bound(human.begin(), human.end(), m);
    const auto hi = std::upper_bound(lo, human.end(), m);
    total += double(lo - human.begin()) + 0.5 * double(hi - lo);
  }
  return total / (double(machine.size()) * double(human.size()));
}

double tpr_at_fpr(std::span<const double> scores, std::span<const Label> labels, double fpr_budget) {
  if (!(fpr_budget >= 0.0 && fpr_budget <= 1.0)) throw MetricError("fpr budget must lie in [0, 1]");
  std::vector<double> machine, human;
  split_by_label(scores, labels, machine, human);
  const double n_human = double(human.size());

  // Largest number of human exceedances e with e / n_human <= budget.
  auto allowed = static_cast<std::size_t>(std::floor(fpr_budget * n_human));
  while (allowed + 1 <= human.size() && double(allowed + 1) / n_human <= fpr_budget) ++allowed;
  while (allowed > 0 && double(allowed) / n_human > fpr_budget) --allowed;
  if (allowed >= human.size()) return 1.0;

  // tau is the (allowed + 1)-th largest human score.
  std::nth_element(human.begin(), human.begin() + static_cast<std::ptrdiff_t>(allowed), human.end(),
                   std::greater<>());
  const double tau = human[allowed];
  const auto hits = std::count_if(machine.begin(), machine.end(), [tau](double m) { return m > tau; });
  return double(hits) / double(machine.size());
}

std::vector<Label> labels_of(const Corpus& corpus) {
  std::vector<Label> out;
  out.reserve(corpus.size());
  for (const auto& rec : corpus.records) out.push_back(rec.label);
  return out;
}

}  // namespace mgt
