// SPDX-License-Identifier: Apache-2.0
#include "agcc/synth.hpp"

#include <cmath>
#include <numbers>

#include "agcc/error.hpp"
#include "agcc/rng.hpp"

namespace agcc::synth {
namespace {

constexpr double kPi = std::numbers::pi;

Point2 base_mouth_point(std::size_t k) {
  const double a = static_cast<double>(k) * 2.0 * kPi / 12.0;
  return {0.3 * std::cos(kPi + a), -0.9 + 0.12 * std::sin(a)};
}

std::vector<double> random_direction(std::mt19937_64& rng, std::size_t dims, double norm) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> v(dims);
  double s = 0.0;
  for (double& x : v) {
    x = g(rng);
    s += x * x;
  }
  const double scale = norm / std::sqrt(std::max(s, 1e-300));
  for (double& x : v) x *= scale;
  return v;
}

std::string_view arpabet_for(Vowel v) {
  switch (v) {
    case Vowel::A: return "AA1";
    case Vowel::Schwa: return "AH0";
    case Vowel::E: return "EH1";
    case Vowel::I: return "IY1";
    case Vowel::Ae: return "AE1";
    case Vowel::U: return "UW1";
  }
  return "AA1";
}

std::string padded(std::size_t i) {
  std::string s = std::to_string(i);
  return std::string(s.size() < 5 ? 5 - s.size() : 0, '0') + s;
}

}  // namespace

std::vector<std::array<double, 4>> identity_coupling(std::size_t n_families) {
  std::vector<std::array<double, 4>> c(n_families, {0, 0, 0, 0});
  for (std::size_t f = 0; f < n_families; ++f) c[f][f % 4] = 1.0;
  return c;
}

Series family_pattern(std::size_t family, std::size_t n_families, std::size_t length, double amplitude,
                      std::uint64_t seed) {
  Series s(length, kGestureDims);
  std::vector<double> ramp_dir(kGestureDims, 0.0);
  std::vector<double> bump_dir(kGestureDims, 0.0);
  if (n_families == 3) {
    const double sign = family == 0 ? 1.0 : family == 1 ? -1.0 : 0.0;
    for (std::size_t k = 0; k < kMouthLandmarks; ++k) {
      const bool lower = k >= 7;
      ramp_dir[2 * k + 1] = sign * (lower ? 2.0 : 1.0);
    }
  } else {
    auto rng = substream(seed, "synth.family", family);
    ramp_dir = random_direction(rng, kGestureDims, std::sqrt(static_cast<double>(kGestureDims)));
    bump_dir = random_direction(rng, kGestureDims, std::sqrt(static_cast<double>(kGestureDims)));
  }
  for (std::size_t t = 0; t < length; ++t) {
    const double phi = length > 1 ? static_cast<double>(t) / static_cast<double>(length - 1) : 0.0;
    for (std::size_t k = 0; k < kMouthLandmarks; ++k) {
      const Point2 b = base_mouth_point(k);
      for (std::size_t axis = 0; axis < 2; ++axis) {
        const std::size_t col = 2 * k + axis;
        const double base = axis == 0 ? b.x : b.y;
        s(t, col) = base + amplitude * (ramp_dir[col] * (n_families == 3 ? phi : 2.0 * phi - 1.0) +
                                        bump_dir[col] * std::sin(kPi * phi));
      }
    }
  }
  return s;
}

Dataset generate(const SyntheticSpec& spec) {
  if (spec.n_families < 2) fail(ErrorCode::ConfigError, "synthetic spec needs n_families >= 2");
  if (spec.noise_sigma < 0.0) fail(ErrorCode::ConfigError, "noise_sigma must be >= 0");
  if (spec.length_min < 2 || spec.length_max < spec.length_min) {
    fail(ErrorCode::ConfigError, "length range must satisfy 2 <= min <= max");
  }
  auto coupling = spec.coupling;
  if (coupling.empty()) {
    for (std::size_t f = 0; f < spec.n_families; ++f) {
      std::array<double, 4> row{0.1, 0.1, 0.1, 0.1};
      row[f % 4] = 0.7;
      coupling.push_back(row);
    }
  }
  if (coupling.size() != spec.n_families) {
    fail(ErrorCode::ConfigError, "coupling needs one row per family");
  }

  auto geo = substream(spec.seed, "synth.geometry");
  std::vector<std::vector<double>> emotion_mean;
  for (std::size_t e = 0; e < kEmotionCount; ++e) {
    emotion_mean.push_back(random_direction(geo, spec.feature_dim, spec.emotion_separation));
  }
  std::vector<std::vector<double>> family_mean;
  std::vector<std::vector<double>> acoustic_proto;
  for (std::size_t f = 0; f < spec.n_families; ++f) {
    family_mean.push_back(random_direction(geo, spec.feature_dim, spec.family_separation));
    acoustic_proto.push_back(random_direction(geo, spec.acoustic_dim, 2.0));
  }
  std::vector<std::vector<double>> acoustic_emotion;
  for (std::size_t e = 0; e < kEmotionCount; ++e) {
    acoustic_emotion.push_back(random_direction(geo, spec.acoustic_dim, 0.3));
  }

  Dataset ds;
  ds.shift = random_direction(geo, spec.feature_dim, spec.cross_corpus_shift);

  const std::array<std::string, 2> corpora = {spec.source_corpus, spec.target_corpus};
  for (std::size_t ci = 0; ci < 2; ++ci) {
    auto rng = substream(spec.seed, "synth.samples", ci);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> len(spec.length_min, spec.length_max);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> any_vowel(0, kVowelCount - 1);
    std::size_t counter = 0;
    for (std::size_t f = 0; f < spec.n_families; ++f) {
      std::discrete_distribution<int> emo(coupling[f].begin(), coupling[f].end());
      for (std::size_t i = 0; i < spec.samples_per_family; ++i) {
        Sample smp;
        auto& seg = smp.segment;
        const std::size_t length = len(rng);
        seg.series = family_pattern(f, spec.n_families, length, spec.gesture_amplitude, spec.seed);
        for (double& v : seg.series.data()) v += spec.noise_sigma * noise(rng);
        seg.family = static_cast<int>(f);
        seg.emotion = static_cast<Emotion>(emo(rng));
        seg.vowel = u01(rng) < 0.6 ? kAllVowels[f % kVowelCount] : kAllVowels[any_vowel(rng)];
        seg.corpus_id = corpora[ci];
        seg.utterance_id = corpora[ci] + "_" + padded(counter++);
        seg.speaker_id = corpora[ci] + "_spk" + std::to_string(i % 8);
        seg.index = 0;
        seg.segment_id = make_segment_id(seg.utterance_id, 0);
        seg.frame_rate_hz = 30.0;

        const auto e = static_cast<std::size_t>(seg.emotion);
        smp.acoustic = Series(length, spec.acoustic_dim);
        for (std::size_t t = 0; t < length; ++t) {
          const double phi = static_cast<double>(t) / static_cast<double>(length - 1);
          for (std::size_t d = 0; d < spec.acoustic_dim; ++d) {
            smp.acoustic(t, d) = acoustic_proto[f][d] * (2.0 * phi - 1.0) + acoustic_emotion[e][d] +
                                 (ci == 1 ? 0.2 : 0.0) + spec.noise_sigma * noise(rng);
          }
        }

        smp.feature.resize(spec.feature_dim);
        for (std::size_t d = 0; d < spec.feature_dim; ++d) {
          double v = emotion_mean[e][d] + family_mean[f][d] + spec.feature_noise * noise(rng);
          if (ci == 1) v += ds.shift[d];
          smp.feature[d] = static_cast<float>(v);
        }
        ds.samples.push_back(std::move(smp));
      }
    }
  }
  return ds;
}

FaceFrame rest_face(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> j(-0.01, 0.01);
  FaceFrame f;
  for (std::size_t i = 0; i < 17; ++i) {  // jaw line
    const double a = kPi + kPi * static_cast<double>(i) / 16.0;
    f[i] = {0.9 * std::cos(a) + j(rng), -0.3 + 1.0 * std::sin(a) + j(rng)};
  }
  for (std::size_t i = 17; i < 27; ++i) {  // brows
    const double x = -0.8 + 1.6 * static_cast<double>(i - 17) / 9.0;
    f[i] = {x + j(rng), 0.3 + j(rng)};
  }
  for (std::size_t i = 27; i < 36; ++i) {  // nose
    f[i] = {0.05 * static_cast<double>(i % 5) - 0.1 + j(rng), -0.1 - 0.05 * static_cast<double>(i - 27) + j(rng)};
  }
  for (std::size_t k = 0; k < 6; ++k) {
    const double a = static_cast<double>(k) * kPi / 3.0;
    f[36 + k] = {-0.5 + 0.12 * std::cos(a), 0.05 * std::sin(a)};
    f[42 + k] = {0.5 + 0.12 * std::cos(a), 0.05 * std::sin(a)};
  }
  for (std::size_t k = 0; k < 12; ++k) f[48 + k] = base_mouth_point(k);
  for (std::size_t k = 0; k < 8; ++k) {  // inner lip
    const double a = static_cast<double>(k) * 2.0 * kPi / 8.0;
    f[60 + k] = {0.2 * std::cos(kPi + a), -0.9 + 0.05 * std::sin(a)};
  }
  return f;
}

std::vector<LandmarkUtterance> generate_landmark_utterances(const SyntheticSpec& spec, std::size_t per_corpus) {
  auto coupling = spec.coupling.empty() ? identity_coupling(spec.n_families) : spec.coupling;
  const std::array<std::string, 2> corpora = {spec.source_corpus, spec.target_corpus};
  const std::array<std::string_view, 4> consonants = {"P", "T", "S", "M"};
  std::vector<LandmarkUtterance> out;
  for (std::size_t ci = 0; ci < 2; ++ci) {
    auto rng = substream(spec.seed, "synth.landmarks", ci);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> len(spec.length_min, spec.length_max);
    std::uniform_int_distribution<std::size_t> gap(3, 5);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
    for (std::size_t u = 0; u < per_corpus; ++u) {
      LandmarkUtterance utt;
      utt.corpus = corpora[ci];
      utt.emotion = kAllEmotions[u % kEmotionCount];
      auto& seq = utt.landmarks;
      seq.utterance_id = corpora[ci] + "_lm" + padded(u);
      seq.speaker_id = seq.utterance_id;
      seq.frame_rate_hz = 30.0;
      const FaceFrame rest = rest_face(rng);

      std::vector<FaceFrame> canonical;
      auto push_rest = [&](std::size_t n, std::string_view label) {
        const double start = static_cast<double>(canonical.size()) / 30.0;
        for (std::size_t i = 0; i < n; ++i) canonical.push_back(rest);
        utt.alignment.push_back({std::string(label), start, static_cast<double>(canonical.size()) / 30.0});
      };
      push_rest(gap(rng), consonants[u % 4]);
      for (std::size_t v = 0; v < 3; ++v) {
        // Families are drawn in proportion to how strongly they carry this emotion.
        std::vector<double> w;
        for (const auto& row : coupling) w.push_back(row[static_cast<std::size_t>(utt.emotion)] + 1e-3);
        std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
        const std::size_t f = pick(rng);
        const std::size_t n = len(rng);
        const Series g = family_pattern(f, spec.n_families, n, spec.gesture_amplitude, spec.seed);
        const double start = static_cast<double>(canonical.size()) / 30.0;
        for (std::size_t t = 0; t < n; ++t) {
          FaceFrame fr = rest;
          for (std::size_t k = 0; k < kMouthLandmarks; ++k) {
            fr[48 + k] = {g(t, 2 * k) + spec.noise_sigma * noise(rng), g(t, 2 * k + 1) + spec.noise_sigma * noise(rng)};
          }
          canonical.push_back(fr);
        }
        utt.alignment.push_back({std::string(arpabet_for(kAllVowels[f % kVowelCount])), start,
                                 static_cast<double>(canonical.size()) / 30.0});
        push_rest(gap(rng), consonants[(u + v + 1) % 4]);
      }

      // Slow head motion: proper similarity per frame.
      const double p0 = phase(rng);
      for (std::size_t t = 0; t < canonical.size(); ++t) {
        const double tt = static_cast<double>(t);
        const double theta = 0.15 * std::sin(0.1 * tt + p0);
        const double scale = 90.0 + 10.0 * std::sin(0.05 * tt + p0);
        const double tx = 320.0 + 2.0 * tt, ty = 240.0 + 5.0 * std::cos(0.07 * tt);
        FaceFrame img;
        const double c = std::cos(theta), s = std::sin(theta);
        for (std::size_t i = 0; i < kFaceLandmarks; ++i) {
          const auto& p = canonical[t][i];
          img[i] = {scale * (c * p.x - s * p.y) + tx, scale * (s * p.x + c * p.y) + ty};
        }
        seq.frames.push_back(img);
        seq.times_sec.push_back(tt / 30.0);
      }
      out.push_back(std::move(utt));
    }
  }
  return out;
}

}  // namespace agcc::synth
