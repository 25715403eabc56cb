#pragma once

// Labeled synthetic datasets with a known discriminative motif, used by the
// demo, the CLI `synth` command and the test suites.

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sets/dataset.hpp"
#include "sets/random.hpp"

namespace sets {

struct MotifSpec {
  std::size_t per_class = 50;
  std::size_t dims = 3;
  std::size_t length = 60;
  std::size_t motif_dim = 0;
  double noise = 0.2;
  double amplitude = 4.0;
  std::size_t width = 9;
  std::size_t center = 25;  // event start before jitter
  std::size_t jitter = 3;
  std::uint64_t seed = 0;
};

struct MotifDataset {
  MTSDataset data;
  /// Start of the injected event for every instance, by dataset index.
  std::vector<std::size_t> event_start;
  std::size_t width = 0;
  std::size_t motif_dim = 0;
  ClassLabel motif_class;
};

/// Two classes over Gaussian noise. On `motif_dim` class "A" carries a
/// triangular spike and class "B" a flat-topped pulse of the same height and
/// width, so both classes share a value range and differ only in shape. The
/// spike is the motif; other dimensions are pure noise.
inline MotifDataset make_motif_dataset(const MotifSpec& spec) {
  Rng rng(spec.seed);
  std::vector<MTSInstance> instances;
  std::vector<ClassLabel> labels;
  MotifDataset out;
  out.width = spec.width;
  out.motif_dim = spec.motif_dim;
  out.motif_class = "A";
  const double half = 0.5 * static_cast<double>(spec.width - 1);
  for (std::size_t i = 0; i < 2 * spec.per_class; ++i) {
    const bool spike = i % 2 == 0;
    Matrix m(spec.dims, spec.length);
    for (std::size_t d = 0; d < spec.dims; ++d)
      for (std::size_t t = 0; t < spec.length; ++t) m(d, t) = spec.noise * rng.normal();
    const auto start = static_cast<std::size_t>(rng.between(static_cast<std::int64_t>(spec.center - spec.jitter),
                                                            static_cast<std::int64_t>(spec.center + spec.jitter)));
    for (std::size_t k = 0; k < spec.width; ++k) {
      const double shape = spike ? spec.amplitude * (1.0 - std::abs(static_cast<double>(k) - half) / (half + 1.0))
                                 : spec.amplitude;
      m(spec.motif_dim, start + k) += shape;
    }
    instances.push_back({std::move(m), std::to_string(i)});
    labels.push_back(spike ? "A" : "B");
    out.event_start.push_back(start);
  }
  out.data = MTSDataset(std::move(instances), std::move(labels));
  return out;
}

/// Noise-only dataset with exact per-class counts; each class gets its own
/// mean level so the classes are separable.
inline MTSDataset make_level_dataset(const std::map<ClassLabel, std::size_t>& counts, std::size_t dims,
                                     std::size_t length, double noise, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<MTSInstance> instances;
  std::vector<ClassLabel> labels;
  double level = 0.0;
  for (const auto& [label, n] : counts) {
    for (std::size_t i = 0; i < n; ++i) {
      Matrix m(dims, length);
      for (std::size_t d = 0; d < dims; ++d)
        for (std::size_t t = 0; t < length; ++t) m(d, t) = level + noise * rng.normal();
      instances.push_back({std::move(m), std::to_string(instances.size())});
      labels.push_back(label);
    }
    level += 10.0;
  }
  return MTSDataset(std::move(instances), std::move(labels));
}

}  // namespace sets
