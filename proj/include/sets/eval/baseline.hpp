#pragma once

#include <limits>
#include <vector>

#include "sets/blackbox.hpp"
#include "sets/cfgen.hpp"
#include "sets/dataset.hpp"

namespace sets {

/// Whole-dimension substitution from the nearest unlike neighbour. Each round
/// tries every unused dimension on top of the current substitutions and keeps
/// the one with the highest target score, stopping at the first valid result.
inline Counterfactual baseline_dim_substitution(const MTSInstance& x, const ClassLabel& original,
                                                const ClassLabel& target, const MTSDataset& train, Classifier& model) {
  Counterfactual cf{x.id, original, target, x.values, {}, false, {}, -1, 0};
  cf.model_scores = model.predict(x.values);
  ++cf.model_calls;
  if (cf.model_scores.argmax() == target) {
    cf.valid = true;
    cf.phase = 0;
    return cf;
  }
  const Matrix& nun = train.instance(nearest_unlike_neighbor_index(x.values, target, train)).values;
  const std::size_t dims = x.values.dims(), length = x.values.length();
  std::vector<bool> used(dims, false);
  Matrix current = x.values;
  for (std::size_t round = 0; round < dims; ++round) {
    std::size_t best_dim = dims;
    double best_score = -std::numeric_limits<double>::infinity();
    bool best_valid = false;
    PredictionVector best_pred;
    for (std::size_t d = 0; d < dims; ++d) {
      if (used[d]) continue;
      Matrix m = current;
      std::copy(nun.row(d).begin(), nun.row(d).end(), m.row(d).begin());
      const auto pred = model.predict(m);
      ++cf.model_calls;
      const bool valid = pred.argmax() == target;
      // a valid candidate beats any invalid one; otherwise highest target score
      if ((valid && !best_valid) || (valid == best_valid && pred.score(target) > best_score)) {
        best_dim = d;
        best_score = pred.score(target);
        best_valid = valid;
        best_pred = pred;
      }
    }
    used[best_dim] = true;
    std::copy(nun.row(best_dim).begin(), nun.row(best_dim).end(), current.row(best_dim).begin());
    cf.perturbations.push_back(
        {PerturbationRecord::Kind::Substitution, best_dim, 0, length, std::nullopt, PerturbationRecord::Source::Nun});
    cf.values = current;
    cf.model_scores = best_pred;
    if (best_valid) {
      cf.valid = true;
      cf.phase = 1;
      return cf;
    }
  }
  return cf;
}

}  // namespace sets
