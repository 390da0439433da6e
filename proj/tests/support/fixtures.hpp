#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "ilvm/model.hpp"
#include "ilvm/rng.hpp"
#include "ilvm/samples.hpp"
#include "ilvm/scene.hpp"

namespace ilvm::testing {

/// N actors at random poses inside a square of the given half-size, with
/// smooth random past and future tracks.
Scene random_scene(Rng& rng, std::size_t actors, std::size_t history, std::size_t horizon, std::uint64_t id = 0,
                   double half_size = 30.0);

/// A sample set with random waypoints near the ground truth.
SceneSampleSet random_samples(const Scene& scene, std::size_t samples, Rng& rng, double spread = 2.0);

/// Small widths for gradient checks and property tests.
model::ModelConfig tiny_config(std::size_t history = 3, std::size_t horizon = 3);

/// Adds U(-spread, spread) to every parameter. Zero-initialised biases plus a
/// dead ReLU layer can leave a whole feature block exactly at zero, which puts
/// downstream ReLUs on their kinks; gradient checks want a generic point.
void jitter_parameters(const nn::ParameterSet& params, Rng& rng, double spread = 0.1);

/// Identity-free random permutation of 0..n-1 (for n >= 2 never the identity).
std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng);

}  // namespace ilvm::testing
