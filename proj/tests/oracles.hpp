#pragma once

// Reference implementations that share no code with the library: breadth-first
// search over edit scripts and enumeration of subsequences.

#include <cstddef>
#include <deque>
#include <string>
#include <unordered_map>
#include <vector>

namespace oracle {

// Fewest single-character insertions, deletions and substitutions turning a
// into b, found by breadth-first search. Edits draw characters from the union
// of both strings' characters (other characters never shorten a script).
inline std::size_t edit_script_distance(const std::string& a, const std::string& b) {
  std::string alphabet;
  for (char c : a + b) {
    if (alphabet.find(c) == std::string::npos) alphabet += c;
  }
  std::unordered_map<std::string, std::size_t> dist{{a, 0}};
  std::deque<std::string> queue{a};
  const std::size_t max_len = std::max(a.size(), b.size());
  while (!queue.empty()) {
    const std::string s = queue.front();
    queue.pop_front();
    const std::size_t d = dist[s];
    if (s == b) return d;
    auto visit = [&](std::string t) {
      if (t.size() > max_len) return;
      if (dist.emplace(t, d + 1).second) queue.push_back(std::move(t));
    };
    for (std::size_t i = 0; i <= s.size(); ++i) {
      for (char c : alphabet) visit(s.substr(0, i) + c + s.substr(i));
    }
    for (std::size_t i = 0; i < s.size(); ++i) {
      visit(s.substr(0, i) + s.substr(i + 1));
      for (char c : alphabet) {
        if (c != s[i]) {
          std::string t = s;
          t[i] = c;
          visit(std::move(t));
        }
      }
    }
  }
  return static_cast<std::size_t>(-1);
}

inline bool is_subsequence(const std::vector<std::string>& sub, const std::vector<std::string>& seq) {
  std::size_t j = 0;
  for (std::size_t i = 0; i < seq.size() && j < sub.size(); ++i) {
    if (seq[i] == sub[j]) ++j;
  }
  return j == sub.size();
}

// Longest common subsequence by trying every subsequence of a.
inline std::size_t lcs_by_enumeration(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::size_t best = 0;
  for (std::size_t mask = 0; mask < (std::size_t{1} << a.size()); ++mask) {
    std::vector<std::string> sub;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (mask >> i & 1) sub.push_back(a[i]);
    }
    if (sub.size() > best && is_subsequence(sub, b)) best = sub.size();
  }
  return best;
}

// All sequences over alphabet with length 0..max_len.
template <class Seq, class Alphabet>
std::vector<Seq> all_sequences(const Alphabet& alphabet, std::size_t max_len) {
  std::vector<Seq> out{Seq{}};
  std::size_t begin = 0;
  for (std::size_t len = 1; len <= max_len; ++len) {
    const std::size_t end = out.size();
    for (std::size_t i = begin; i < end; ++i) {
      for (const auto& sym : alphabet) {
        Seq s = out[i];
        s.insert(s.end(), sym);
        out.push_back(std::move(s));
      }
    }
    begin = end;
  }
  return out;
}

}  // namespace oracle
