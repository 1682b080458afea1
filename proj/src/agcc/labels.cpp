// SPDX-License-Identifier: Apache-2.0
#include "agcc/labels.hpp"

#include <algorithm>
#include <cctype>

#include "agcc/error.hpp"

namespace agcc {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

std::string_view vowel_symbol(Vowel v) noexcept {
  switch (v) {
    case Vowel::A: return "A";
    case Vowel::Schwa: return "@";
    case Vowel::E: return "E";
    case Vowel::I: return "i";
    case Vowel::Ae: return "ae";
    case Vowel::U: return "u";
  }
  return "?";
}

std::optional<Vowel> vowel_from_symbol(std::string_view s) noexcept {
  for (Vowel v : kAllVowels) {
    if (vowel_symbol(v) == s) return v;
  }
  return std::nullopt;
}

std::string_view emotion_name(Emotion e) noexcept {
  switch (e) {
    case Emotion::Neutral: return "Neutral";
    case Emotion::Anger: return "Anger";
    case Emotion::Happiness: return "Happiness";
    case Emotion::Sadness: return "Sadness";
  }
  return "?";
}

std::optional<Emotion> emotion_from_name(std::string_view s) noexcept {
  const std::string l = lower(s);
  if (l == "neutral" || l == "neu") return Emotion::Neutral;
  if (l == "anger" || l == "ang" || l == "angry") return Emotion::Anger;
  if (l == "happiness" || l == "hap" || l == "happy") return Emotion::Happiness;
  if (l == "sadness" || l == "sad") return Emotion::Sadness;
  return std::nullopt;
}

Vowel parse_vowel(std::string_view s) {
  if (auto v = vowel_from_symbol(s)) return *v;
  fail(ErrorCode::ParseError, "unknown vowel '" + std::string(s) + "'");
}

Emotion parse_emotion(std::string_view s) {
  if (auto e = emotion_from_name(s)) return *e;
  fail(ErrorCode::ParseError, "unknown emotion '" + std::string(s) + "'");
}

}  // namespace agcc
