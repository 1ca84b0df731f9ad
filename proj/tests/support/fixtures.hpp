#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "djmix/synthmix.hpp"

namespace fixture {

// Track spec with a fresh chord every 8 beats in the body and one held chord
// across the intro and the outro, the way mixable tracks are built.
inline djmix::SynthTrackSpec track(std::string id, std::uint64_t seed, double bpm, std::size_t beats,
                                   std::size_t intro = 0, std::size_t outro = 0) {
  djmix::SynthTrackSpec s;
  s.id = std::move(id);
  s.seed = seed;
  s.tempo_bpm = bpm;
  s.n_beats = beats;
  s.intro_beats = intro;
  s.outro_beats = outro;
  std::mt19937_64 rng(seed);
  const std::size_t slots = beats / 8, intro_slots = (intro + 7) / 8, outro_slots = (outro + 7) / 8;
  int prev = -1;
  for (std::size_t k = 0; k < slots; ++k) {
    if ((k > 0 && k < intro_slots) || (outro_slots > 0 && k > slots - outro_slots)) {
      s.chord_progression.push_back(prev);
      continue;
    }
    int r;
    do r = static_cast<int>(rng() % 12);
    while (r == prev);
    s.chord_progression.push_back(prev = r);
  }
  return s;
}

}  // namespace fixture
