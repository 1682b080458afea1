// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "agcc/geometry.hpp"
#include "agcc/labels.hpp"
#include "agcc/segmentation.hpp"
#include "agcc/series.hpp"

namespace agcc::synth {

/// Desk-scale two-corpus generator. Each planted family is one mouth-gesture
/// pattern; emotions are drawn per family from `coupling` (rows: family,
/// columns: Neutral, Anger, Happiness, Sadness). Embedding features carry an
/// emotion component, a family component and, for the target corpus, a fixed
/// shift of norm `cross_corpus_shift`.
struct SyntheticSpec {
  std::size_t n_families = 3;
  std::size_t samples_per_family = 50;  // per corpus
  double noise_sigma = 0.05;
  std::size_t length_min = 8;
  std::size_t length_max = 14;
  double cross_corpus_shift = 3.0;
  std::vector<std::array<double, 4>> coupling;  // empty: dominant emotion f % 4 with p = 0.7
  std::size_t feature_dim = 32;
  std::size_t acoustic_dim = 6;
  double feature_noise = 1.0;
  double emotion_separation = 1.2;
  double family_separation = 1.0;
  double gesture_amplitude = 0.15;
  std::string source_corpus = "source";
  std::string target_corpus = "target";
  std::uint64_t seed = 0;
};

// Coupling where family f always carries emotion f % 4.
std::vector<std::array<double, 4>> identity_coupling(std::size_t n_families);

struct Sample {
  GestureSegment segment;     // gesture series, tags, planted family
  Series acoustic;            // T x acoustic_dim frame series
  std::vector<float> feature; // fixed-dimension utterance embedding
};

struct Dataset {
  std::vector<Sample> samples;  // source corpus first, then target
  std::vector<double> shift;    // the target corpus offset in feature space
};

Dataset generate(const SyntheticSpec& spec);

// Clean (noise-free) gesture pattern of a planted family at a given length.
// With three families the patterns are rise, fall and flat lower-lip motion;
// otherwise each family gets its own seeded motion direction.
Series family_pattern(std::size_t family, std::size_t n_families, std::size_t length,
                      double amplitude, std::uint64_t seed);

/// Resting 68-point face in the canonical frame, deterministic per speaker.
FaceFrame rest_face(std::mt19937_64& rng);

struct LandmarkUtterance {
  LandmarkSequence landmarks;          // image-space coordinates (head motion applied)
  std::vector<PhonemeInterval> alignment;
  Emotion emotion = Emotion::Neutral;
  std::string corpus;
};

/// Full-face utterances whose vowel intervals carry family gestures, moved
/// by a slowly drifting similarity transform per frame.
std::vector<LandmarkUtterance> generate_landmark_utterances(const SyntheticSpec& spec, std::size_t per_corpus);

}  // namespace agcc::synth
