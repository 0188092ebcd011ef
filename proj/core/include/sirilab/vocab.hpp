// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "sirilab/common.hpp"

namespace sirilab::synth {

// Closed, version-stamped vocabulary. Id 0 is reserved for padding.
class Vocabulary {
 public:
  static constexpr int kPadId = 0;
  static constexpr int kUnkId = 1;

  // The fixed v1 vocabulary used by every generated dataset.
  static const Vocabulary& standard();

  explicit Vocabulary(std::string version, std::vector<std::string> tokens);

  int size() const { return int(tokens_.size()); }
  const std::string& version() const { return version_; }
  const std::vector<std::string>& tokens() const { return tokens_; }

  // Id of a word; kUnkId if the word is not in the vocabulary.
  int id(const std::string& word) const;
  // Id of a word that must exist (internal use by the generator).
  int id_strict(const std::string& word) const;
  const std::string& word(int id) const;

  std::vector<int> encode(const std::vector<std::string>& words) const;
  std::string decode(const std::vector<int>& ids) const;

 private:
  std::string version_;
  std::vector<std::string> tokens_;
};

}  // namespace sirilab::synth
