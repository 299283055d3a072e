#pragma once

#include <cstdint>

#include "ifl/data/dataset.hpp"

namespace ifl::data {

// Network-free stand-in for the real dataset: five Gaussian blob sites sit
// on a ring in the 28x28 canvas and each class lights up a distinct pair of
// them, with center jitter, amplitude jitter and pixel noise. All classes
// share the same spatial support, so features learned on a skewed shard
// still transfer to classes the shard lacks. label_flip replaces that
// fraction of labels with a uniformly random wrong class (training-noise
// knob; images are unaffected).
Dataset make_synthetic(Index n, std::uint64_t seed, double label_flip = 0.0);

}  // namespace ifl::data
