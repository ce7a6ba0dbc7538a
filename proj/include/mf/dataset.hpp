#pragma once

#include <cstddef>

#include "mf/tiny_denoiser.hpp"

namespace mf {

// Procedural training images in [-1, 1]: Gaussian blobs (label [1, 0]) or
// two-scale checkerboards (label [0, 1]), chosen with equal probability.
// Extra channels repeat the pattern with a per-channel gain in [0.6, 1].
TrainingSample synthetic_sample(Rng& rng, std::size_t size, std::size_t channels);
SampleSource synthetic_dataset(std::size_t size = 16, std::size_t channels = 1);

inline constexpr std::size_t kSyntheticClasses = 2;

}  // namespace mf
