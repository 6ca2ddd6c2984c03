// Copyright 2026 The ropeext Authors
// SPDX-License-Identifier: Apache-2.0

#include <string_view>

#include "ropeext/needle.hpp"

namespace ropeext {

namespace {

// Lower-case ASCII only; key words must match [a-z]+-[a-z]+.
constexpr std::string_view kAdjectives[] = {
    "numerous", "able", "abrupt", "adorable", "agile", "alert", "ancient", "angry", "anxious",
    "arctic", "bashful", "bitter", "bold", "brave", "breezy", "bright", "brisk", "broad",
    "calm", "careful", "cheerful", "chilly", "clever", "cloudy", "clumsy", "cold", "colossal",
    "cosmic", "crisp", "crooked", "curious", "damp", "dapper", "daring", "dusty", "eager",
    "early", "elastic", "elegant", "empty", "fancy", "fierce", "flat", "fluffy", "fragile",
    "fresh", "friendly", "frosty", "gentle", "giant", "glossy", "golden", "graceful", "grand",
    "happy", "hasty", "heavy", "hidden", "hollow", "honest", "humble", "icy", "jolly", "keen",
    "kind", "large", "lazy", "little", "lively", "lonely", "loud", "lucky", "lunar", "magic",
    "mellow", "mighty", "misty", "modern", "narrow", "nervous", "nimble", "noisy", "odd",
    "orange", "patient", "plain", "polite", "proud", "quick", "quiet", "rapid", "rare", "rough",
    "round", "rustic", "sandy", "scarlet", "shiny", "silent", "silky", "simple", "sleepy",
    "slow", "smooth", "solar", "spicy", "spotted", "steady", "stormy", "sturdy", "sunny",
    "swift", "tall", "tame", "tender", "thirsty", "tidy", "tiny", "vast", "velvet", "vivid",
    "wandering", "warm", "wild", "windy", "wise", "witty", "wooden", "young", "zealous",
};

constexpr std::string_view kNouns[] = {
    "kite", "acorn", "anchor", "apple", "arrow", "badge", "banjo", "basket", "beacon", "bell",
    "bicycle", "blanket", "boat", "bottle", "bridge", "bucket", "button", "cabin", "camera",
    "candle", "canyon", "carpet", "castle", "cherry", "circle", "cloud", "comet", "compass",
    "cookie", "coral", "cotton", "crayon", "crystal", "cup", "daisy", "desert", "diamond",
    "dolphin", "dragon", "drum", "eagle", "ember", "engine", "falcon", "feather", "fern",
    "fiddle", "forest", "fountain", "garden", "glacier", "globe", "goblet", "guitar", "hammer",
    "harbor", "helmet", "hill", "island", "jacket", "jewel", "kettle", "ladder", "lantern",
    "leaf", "lemon", "lighthouse", "lily", "marble", "meadow", "mirror", "mitten", "moon",
    "mountain", "needle", "nest", "ocean", "orchid", "otter", "owl", "paddle", "panther",
    "parrot", "pebble", "pencil", "pepper", "piano", "pillow", "planet", "pocket", "pond",
    "puzzle", "quill", "rabbit", "raven", "ribbon", "river", "robot", "rocket", "saddle",
    "sail", "scarf", "shell", "shovel", "signal", "sparrow", "spoon", "squirrel", "star",
    "stone", "storm", "sunflower", "tablet", "teapot", "thunder", "tiger", "tower", "trumpet",
    "tulip", "tunnel", "umbrella", "valley", "violin", "wagon", "walnut", "whale", "whistle",
    "willow", "window", "wizard", "yacht", "zebra",
};

}  // namespace

std::span<const std::string_view> adjectives() { return kAdjectives; }
std::span<const std::string_view> nouns() { return kNouns; }

}  // namespace ropeext
