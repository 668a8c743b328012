// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "wakavt/constraint/morae.hpp"

namespace wakavt::corpus {

/// An encoded poem: body tokens with separators, plus the keyword id.
struct Poem {
  std::vector<int> tokens;
  int keyword = -1;

  std::size_t length() const { return tokens.size(); }
  bool operator==(const Poem&) const = default;
};

/**
 * Word <-> id map with a morae count per word.
 *
 * Ids are dense from 0; the six specials come first in a fixed order.
 */
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kStart = 1;
  static constexpr int kEnd = 2;
  static constexpr int kSep = 3;
  static constexpr int kUnk = 4;
  static constexpr int kCls = 5;
  static constexpr int kNumSpecials = 6;
  static constexpr std::string_view kSepText = "|";

  Vocabulary();

  /// Adds `word` or returns its existing id; a conflicting morae count throws.
  int add(const std::string& word, int morae);

  std::optional<int> find(std::string_view word) const;
  int id(std::string_view word) const;
  int id_or_unk(std::string_view word) const;
  const std::string& word(int id) const { return words_.at(static_cast<std::size_t>(id)); }
  int morae(int id) const { return morae_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return words_.size(); }
  static bool is_special(int id) { return id >= 0 && id < kNumSpecials; }

  constraint::MoraeTable morae_table() const;

  /// Lines "id<TAB>word<TAB>morae".
  void write(std::ostream& out) const;
  static Vocabulary read(std::istream& in, const std::string& source = "<vocab>");
  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

 private:
  std::vector<std::string> words_;
  std::vector<int> morae_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace wakavt::corpus
