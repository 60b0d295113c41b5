#pragma once

// Fixture word lists for the offline scorer and the synthetic generator.
// They make tests and synthetic runs deterministic; they are not a
// linguistically meaningful toxicity model.

#include <array>
#include <string>
#include <string_view>
#include <unordered_set>

namespace ctu {

inline constexpr std::array<std::string_view, 50> kFlaggedWords = {
    "idiot",    "stupid",   "moron",    "dumb",      "loser",     "trash",    "garbage",   "pathetic", "hate",
    "ugly",     "fool",     "clown",    "jerk",      "scum",      "worthless", "disgusting", "liar",    "creep",
    "freak",    "lame",     "awful",    "toxic",     "idiotic",   "imbecile", "dimwit",    "nitwit",   "buffoon",
    "halfwit",  "dunce",    "coward",   "vile",      "gross",     "rotten",   "nasty",     "shameful", "incompetent",
    "clueless", "useless",  "ignorant", "arrogant",  "hypocrite", "parasite", "pig",       "rat",      "snake",
    "weirdo",   "bonehead", "numbskull", "blockhead", "dork"};

inline constexpr std::array<std::string_view, 24> kFillerWords = {
    "today",  "coffee", "weather", "meeting", "music",  "game",  "friends", "news",
    "morning", "city",  "train",   "book",    "garden", "movie", "team",    "project",
    "weekend", "photo", "river",   "market",  "dinner", "walk",  "update",  "season"};

using Lexicon = std::unordered_set<std::string>;

inline Lexicon default_lexicon() {
  Lexicon lex;
  for (auto w : kFlaggedWords) lex.emplace(w);
  return lex;
}

}  // namespace ctu
