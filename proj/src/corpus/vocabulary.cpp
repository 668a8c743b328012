// SPDX-License-Identifier: Apache-2.0
#include "wakavt/corpus/vocabulary.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace wakavt::corpus {

Vocabulary::Vocabulary() {
  const std::pair<const char*, int> specials[] = {
      {"<pad>", 0}, {"<s>", 0}, {"</s>", 0}, {"|", 0}, {"<unk>", constraint::kUnknownMorae},
      {"<cls>", 0}};
  for (const auto& [w, m] : specials) {
    index_.emplace(w, static_cast<int>(words_.size()));
    words_.emplace_back(w);
    morae_.push_back(m);
  }
}

int Vocabulary::add(const std::string& word, int morae) {
  if (auto it = index_.find(word); it != index_.end()) {
    if (morae_[it->second] != morae) {
      throw std::invalid_argument("word '" + word + "' has morae " + std::to_string(morae) +
                                  " but was first seen with " +
                                  std::to_string(morae_[it->second]));
    }
    return it->second;
  }
  if (morae < 1) throw std::invalid_argument("word '" + word + "' needs a positive morae count");
  if (word.empty() || word.find_first_of(" \t\n") != std::string::npos) {
    throw std::invalid_argument("word '" + word + "' is empty or contains whitespace");
  }
  const int id = static_cast<int>(words_.size());
  index_.emplace(word, id);
  words_.push_back(word);
  morae_.push_back(morae);
  return id;
}

std::optional<int> Vocabulary::find(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

int Vocabulary::id(std::string_view word) const {
  if (auto f = find(word)) return *f;
  throw std::out_of_range("word '" + std::string(word) + "' is not in the vocabulary");
}

int Vocabulary::id_or_unk(std::string_view word) const { return find(word).value_or(kUnk); }

constraint::MoraeTable Vocabulary::morae_table() const {
  return constraint::MoraeTable(morae_, kSep, kEnd, {kPad, kStart, kUnk, kCls});
}

void Vocabulary::write(std::ostream& out) const {
  for (std::size_t i = 0; i < words_.size(); ++i)
    out << i << '\t' << words_[i] << '\t' << morae_[i] << '\n';
}

Vocabulary Vocabulary::read(std::istream& in, const std::string& source) {
  Vocabulary v;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fail = [&](const std::string& why) {
      return std::runtime_error(source + ":" + std::to_string(line_no) + ": " + why);
    };
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) throw fail("expected id<TAB>word<TAB>morae");
    std::size_t id = 0;
    int morae = 0;
    try {
      id = std::stoull(line.substr(0, t1));
      morae = std::stoi(line.substr(t2 + 1));
    } catch (const std::exception&) {
      throw fail("non-numeric id or morae count");
    }
    const std::string word = line.substr(t1 + 1, t2 - t1 - 1);
    if (id < kNumSpecials) {
      if (v.words_[id] != word || v.morae_[id] != morae) throw fail("special token mismatch");
      continue;
    }
    if (id != v.size()) throw fail("ids must be dense and ascending");
    try {
      v.add(word, morae);
    } catch (const std::invalid_argument& e) {
      throw fail(e.what());
    }
  }
  return v;
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write vocabulary: " + path);
  write(out);
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open vocabulary: " + path);
  return read(in, path);
}

}  // namespace wakavt::corpus
