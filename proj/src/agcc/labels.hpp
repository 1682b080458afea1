// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace agcc {

enum class Vowel { A = 0, Schwa, E, I, Ae, U };
inline constexpr std::size_t kVowelCount = 6;
inline constexpr std::array<Vowel, kVowelCount> kAllVowels = {Vowel::A, Vowel::Schwa, Vowel::E,
                                                              Vowel::I, Vowel::Ae, Vowel::U};

enum class Emotion { Neutral = 0, Anger, Happiness, Sadness };
inline constexpr std::size_t kEmotionCount = 4;
inline constexpr std::array<Emotion, kEmotionCount> kAllEmotions = {
    Emotion::Neutral, Emotion::Anger, Emotion::Happiness, Emotion::Sadness};

// Vowel symbols as written in reports: A @ E i ae u.
std::string_view vowel_symbol(Vowel v) noexcept;
std::optional<Vowel> vowel_from_symbol(std::string_view s) noexcept;

std::string_view emotion_name(Emotion e) noexcept;
// Accepts the full names and the usual three-letter abbreviations, any case.
std::optional<Emotion> emotion_from_name(std::string_view s) noexcept;

Vowel parse_vowel(std::string_view s);      // throws ParseError
Emotion parse_emotion(std::string_view s);  // throws ParseError

}  // namespace agcc
