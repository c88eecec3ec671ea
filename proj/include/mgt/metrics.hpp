#pragma once

#include <span>
#include <vector>

#include "mgt/score_model.hpp"

namespace mgt {

// Mann-Whitney AUROC: P(machine > human) + 0.5 P(tie) over all pairs.
double auroc(std::span<const double> scores, std::span<const Label> labels);

// True-positive rate at the smallest threshold tau whose human exceedance
// rate (score > tau) is within `fpr_budget`.
double tpr_at_fpr(std::span<const double> scores, std::span<const Label> labels,
                  double fpr_budget = 0.01);

std::vector<Label> labels_of(const Corpus& corpus);

}  // namespace mgt
