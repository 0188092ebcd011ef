// SPDX-License-Identifier: Apache-2.0
#include "sirilab/vocab.hpp"

#include <unordered_map>

namespace sirilab::synth {

namespace {

const std::vector<std::string> kStandardTokens = {
    "<pad>",     "<unk>",      "the",      "small",      "large",
    "red",       "green",      "blue",     "yellow",     "circle",
    "square",    "triangle",   "leftmost", "rightmost",  "topmost",
    "bottommost", "left-of",   "right-of", "above",      "below",
};

}  // namespace

Vocabulary::Vocabulary(std::string version, std::vector<std::string> tokens)
    : version_(std::move(version)), tokens_(std::move(tokens)) {
  require(tokens_.size() >= 2 && tokens_[0] == "<pad>",
          "Vocabulary: id 0 must be <pad>");
}

const Vocabulary& Vocabulary::standard() {
  static const Vocabulary v("1", kStandardTokens);
  return v;
}

int Vocabulary::id(const std::string& word) const {
  for (std::size_t i = 0; i < tokens_.size(); ++i)
    if (tokens_[i] == word) return int(i);
  return kUnkId;
}

int Vocabulary::id_strict(const std::string& word) const {
  const int i = id(word);
  require(i != kUnkId || word == tokens_[kUnkId],
          "Vocabulary: unknown word '" + word + "'");
  return i;
}

const std::string& Vocabulary::word(int id) const {
  require(id >= 0 && id < size(), "Vocabulary: id out of range");
  return tokens_[std::size_t(id)];
}

std::vector<int> Vocabulary::encode(const std::vector<std::string>& words) const {
  std::vector<int> out;
  out.reserve(words.size());
  for (const auto& w : words) out.push_back(id_strict(w));
  return out;
}

std::string Vocabulary::decode(const std::vector<int>& ids) const {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ' ';
    out += word(ids[i]);
  }
  return out;
}

}  // namespace sirilab::synth
