#include "mbda/pattern.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <stdexcept>

namespace mbda {

namespace {

boost::regex compile(const std::string& source) {
  try {
    return boost::regex(source, boost::regex::perl);
  } catch (const boost::regex_error& e) {
    throw std::invalid_argument(e.what());
  }
}

boost::cmatch& scratch_match() {
  thread_local boost::cmatch m;
  return m;
}

// Index one past the group starting at s[i] == '(' (or s.size() if unbalanced).
std::size_t skip_group(std::string_view s, std::size_t i) {
  int depth = 0;
  bool in_class = false;
  for (; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '\\') {
      ++i;
      continue;
    }
    if (in_class) {
      if (c == ']') in_class = false;
      continue;
    }
    if (c == '[') {
      in_class = true;
      if (i + 1 < s.size() && s[i + 1] == '^') ++i;
      if (i + 1 < s.size() && s[i + 1] == ']') ++i;
    } else if (c == '(') {
      ++depth;
    } else if (c == ')') {
      if (--depth == 0) return i + 1;
    }
  }
  return s.size();
}

std::size_t skip_class(std::string_view s, std::size_t i) {
  ++i;
  if (i < s.size() && s[i] == '^') ++i;
  if (i < s.size() && s[i] == ']') ++i;
  for (; i < s.size(); ++i) {
    if (s[i] == '\\') {
      ++i;
    } else if (s[i] == ']') {
      return i + 1;
    }
  }
  return s.size();
}

bool has_top_level_alternation(std::string_view s) {
  int depth = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '\\') {
      ++i;
    } else if (c == '[') {
      i = skip_class(s, i) - 1;
    } else if (c == '(') {
      ++depth;
    } else if (c == ')') {
      --depth;
    } else if (c == '|' && depth == 0) {
      return true;
    }
  }
  return false;
}

// False for patterns whose literals the scans below do not model.
bool analysable(std::string_view s) {
  if (has_top_level_alternation(s)) return false;
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    if (s[i] == '\\') {
      ++i;
      continue;
    }
    if (s[i] == '(' && s[i + 1] == '?') {
      const char k = i + 2 < s.size() ? s[i + 2] : '\0';
      if (k != ':' && k != '=' && k != '!' && k != '<') return false;
    }
  }
  return true;
}

}  // namespace

std::optional<std::string> derive_required_literal(std::string_view s) {
  if (!analysable(s)) return std::nullopt;

  std::string best;
  std::string run;
  auto flush = [&] {
    if (run.size() > best.size()) best = run;
    run.clear();
  };

  std::size_t i = 0;
  while (i < s.size()) {
    // Parse one atom; `literal` is set when the atom is a single literal byte.
    std::optional<char> literal;
    const char c = s[i];
    if (c == '(') {
      i = skip_group(s, i);
    } else if (c == '[') {
      i = skip_class(s, i);
    } else if (c == '\\') {
      if (i + 1 >= s.size()) return std::nullopt;
      const char e = s[i + 1];
      if (!std::isalnum(static_cast<unsigned char>(e))) literal = e;
      i += 2;
    } else if (c == '.' || c == '^' || c == '$' || c == '*' || c == '+' || c == '?' ||
               c == '{' || c == ')') {
      ++i;
    } else {
      literal = c;
      ++i;
    }

    // Quantifier on the atom.
    bool optional_atom = false;
    bool repeated = false;
    if (i < s.size()) {
      const char q = s[i];
      if (q == '*' || q == '?') {
        optional_atom = true;
        ++i;
      } else if (q == '+') {
        repeated = true;
        ++i;
      } else if (q == '{' && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1]))) {
        std::size_t j = i + 1;
        std::size_t min = 0;
        while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) {
          min = min * 10 + static_cast<std::size_t>(s[j] - '0');
          ++j;
        }
        while (j < s.size() && s[j] != '}') ++j;
        i = std::min(j + 1, s.size());
        if (min == 0) {
          optional_atom = true;
        } else {
          repeated = true;
        }
      }
      if ((optional_atom || repeated) && i < s.size() && (s[i] == '?' || s[i] == '+')) ++i;
    }

    if (literal && !optional_atom) {
      run.push_back(*literal);
      if (repeated) flush();
    } else {
      flush();
    }
  }
  flush();
  if (best.empty()) return std::nullopt;
  return best;
}

std::optional<LeadingLiteral> derive_leading_literal(std::string_view s) {
  if (!analysable(s)) return std::nullopt;
  static constexpr std::string_view kMeta = ".^$*+?{}()[]|\\";
  LeadingLiteral out;
  std::size_t i = 0;
  while (i < s.size()) {
    char literal;
    std::size_t next;
    if (s[i] == '\\') {
      if (i + 1 >= s.size() || std::isalnum(static_cast<unsigned char>(s[i + 1]))) break;
      literal = s[i + 1];
      next = i + 2;
    } else if (kMeta.find(s[i]) == std::string_view::npos) {
      literal = s[i];
      next = i + 1;
    } else {
      break;
    }
    if (next < s.size()) {
      const char q = s[next];
      if (q == '*' || q == '?' || q == '{') break;
      if (q == '+') {
        out.text += literal;
        return out;
      }
    }
    out.text += literal;
    i = next;
  }
  if (out.text.empty()) return std::nullopt;
  out.whole = i == s.size();
  return out;
}

Pattern::Pattern(std::string source)
    : source_(std::move(source)), regex_(compile(source_)), literal_(derive_required_literal(source_)) {
  if (auto lead = derive_leading_literal(source_)) {
    leading_ = std::move(lead->text);
    whole_literal_ = lead->whole;
  }
}

std::uint64_t Pattern::count(std::string_view text) const {
  const char* const first = text.data();
  const char* const last = first + text.size();
  boost::cmatch& m = scratch_match();
  std::uint64_t n = 0;
  const char* pos = first;
  auto flags = boost::match_default;
  while (pos <= last && boost::regex_search(pos, last, m, regex_, flags, first)) {
    ++n;
    const char* end = m[0].second;
    if (end == m[0].first) {
      if (end == last) break;
      ++end;
    }
    pos = end;
    flags = boost::match_default | boost::match_prev_avail;
  }
  return n;
}

bool Pattern::matches(std::string_view text) const {
  return boost::regex_search(text.data(), text.data() + text.size(), scratch_match(), regex_);
}

std::optional<std::string_view> Pattern::first_capture(std::string_view text) const {
  boost::cmatch& m = scratch_match();
  if (!boost::regex_search(text.data(), text.data() + text.size(), m, regex_)) return std::nullopt;
  if (m.size() < 2 || !m[1].matched) return std::nullopt;
  return std::string_view(m[1].first, static_cast<std::size_t>(m[1].second - m[1].first));
}

PatternSet::PatternSet(std::vector<const Pattern*> patterns) : patterns_(std::move(patterns)) {
  // Trie over distinct literals.
  std::vector<std::string> literals;
  std::vector<std::array<std::int32_t, 256>> trie(1);
  trie[0].fill(-1);
  std::vector<std::vector<std::int32_t>> ends(1);

  for (std::size_t p = 0; p < patterns_.size(); ++p) {
    const Pattern& pattern = *patterns_[p];
    const auto& required = pattern.required_literal();
    const auto& leading = pattern.leading_literal();
    std::optional<std::string> lit;
    if (leading && (pattern.is_literal() || leading->size() >= 4 || !required || *leading == *required)) {
      lit = leading;
      modes_.push_back(pattern.is_literal() ? Mode::kLiteral : Mode::kAnchored);
    } else if (required) {
      lit = required;
      modes_.push_back(Mode::kSearch);
    } else {
      modes_.push_back(Mode::kAlways);
      always_.push_back(p);
      continue;
    }
    auto it = std::find(literals.begin(), literals.end(), *lit);
    std::size_t id = static_cast<std::size_t>(it - literals.begin());
    if (it == literals.end()) {
      literals.push_back(*lit);
      literal_length_.push_back(static_cast<std::uint32_t>(lit->size()));
      literal_to_patterns_.emplace_back();
      std::int32_t state = 0;
      for (unsigned char ch : *lit) {
        if (trie[state][ch] < 0) {
          trie[state][ch] = static_cast<std::int32_t>(trie.size());
          trie.emplace_back().fill(-1);
          ends.emplace_back();
        }
        state = trie[state][ch];
      }
      ends[state].push_back(static_cast<std::int32_t>(id));
    }
    literal_to_patterns_[id].push_back(p);
  }

  // BFS to fill failure transitions into a dense DFA.
  const std::size_t n = trie.size();
  std::vector<std::int32_t> dense(n * 256, 0);
  std::vector<std::vector<std::int32_t>> outputs = ends;
  std::vector<std::int32_t> fail(n, 0);
  std::deque<std::int32_t> queue;
  for (int ch = 0; ch < 256; ++ch) {
    const std::int32_t child = trie[0][ch];
    if (child >= 0) {
      dense[ch] = child;
      queue.push_back(child);
    }
  }
  while (!queue.empty()) {
    const std::int32_t state = queue.front();
    queue.pop_front();
    const auto& suffix_out = outputs[fail[state]];
    outputs[state].insert(outputs[state].end(), suffix_out.begin(), suffix_out.end());
    for (int ch = 0; ch < 256; ++ch) {
      const std::int32_t child = trie[state][ch];
      const std::int32_t via_fail = dense[static_cast<std::size_t>(fail[state]) * 256 + ch];
      if (child >= 0) {
        fail[child] = via_fail;
        dense[static_cast<std::size_t>(state) * 256 + ch] = child;
        queue.push_back(child);
      } else {
        dense[static_cast<std::size_t>(state) * 256 + ch] = via_fail;
      }
    }
  }

  // Bytes absent from every literal share class 0, which always leads back to the root.
  class_.fill(0);
  classes_ = 1;
  for (const auto& lit : literals) {
    for (unsigned char ch : lit) {
      if (class_[ch] == 0) class_[ch] = static_cast<std::uint16_t>(classes_++);
    }
  }
  delta_.assign(n * classes_, 0);
  for (std::size_t st = 0; st < n; ++st) {
    for (int ch = 0; ch < 256; ++ch) {
      if (class_[ch] != 0) delta_[st * classes_ + class_[ch]] = dense[st * 256 + static_cast<std::size_t>(ch)];
    }
  }
  target_offsets_.assign(n + 1, 0);
  for (std::size_t st = 0; st < n; ++st) {
    for (std::int32_t lit : outputs[st]) {
      for (std::size_t p : literal_to_patterns_[static_cast<std::size_t>(lit)]) {
        targets_.push_back({static_cast<std::uint32_t>(p), literal_length_[static_cast<std::size_t>(lit)]});
      }
    }
    target_offsets_[st + 1] = static_cast<std::uint32_t>(targets_.size());
  }
}

void PatternSet::candidates(std::string_view text, std::vector<std::uint8_t>& out) const {
  out.assign(patterns_.size(), 0);
  for (std::size_t p : always_) out[p] = 1;
  if (targets_.empty()) return;
  std::int32_t state = 0;
  for (unsigned char ch : text) {
    state = delta_[static_cast<std::size_t>(state) * classes_ + class_[ch]];
    for (auto i = target_offsets_[state]; i < target_offsets_[state + 1]; ++i) out[targets_[i].pattern] = 1;
  }
}

void PatternSet::count_into(std::string_view text, std::vector<std::uint64_t>& counts, Scratch& scratch) const {
  const std::size_t n = patterns_.size();
  if (scratch.next.size() != n) {
    scratch.next.assign(n, 0);
    scratch.search.assign(n, 0);
  }
  scratch.touched.clear();
  scratch.pending.clear();
  const char* const first = text.data();
  const char* const last = first + text.size();
  boost::cmatch& m = scratch_match();
  if (!targets_.empty()) {
    const std::int32_t* delta = delta_.data();
    std::int32_t state = 0;
    for (std::size_t pos = 0; pos < text.size(); ++pos) {
      state = delta[static_cast<std::size_t>(state) * classes_ + class_[static_cast<unsigned char>(text[pos])]];
      for (auto i = target_offsets_[state]; i < target_offsets_[state + 1]; ++i) {
        const Target t = targets_[i];
        const auto start = static_cast<std::uint32_t>(pos + 1 - t.length);
        switch (modes_[t.pattern]) {
          case Mode::kLiteral:
            if (start >= scratch.next[t.pattern]) {
              ++counts[t.pattern];
              scratch.next[t.pattern] = start + t.length;
              scratch.touched.push_back(t.pattern);
            }
            break;
          case Mode::kAnchored:
            if (start >= scratch.next[t.pattern]) {
              const auto flags =
                  boost::match_continuous | (start > 0 ? boost::match_prev_avail : boost::match_default);
              if (boost::regex_search(first + start, last, m, patterns_[t.pattern]->regex(), flags, first)) {
                ++counts[t.pattern];
                scratch.next[t.pattern] = static_cast<std::uint32_t>(m[0].second - first);
                scratch.touched.push_back(t.pattern);
              }
            }
            break;
          default:
            if (!scratch.search[t.pattern]) {
              scratch.search[t.pattern] = 1;
              scratch.pending.push_back(t.pattern);
            }
        }
      }
    }
  }
  for (std::size_t p : always_) counts[p] += patterns_[p]->count(text);
  for (std::uint32_t p : scratch.pending) {
    counts[p] += patterns_[p]->count(text);
    scratch.search[p] = 0;
  }
  for (std::uint32_t p : scratch.touched) scratch.next[p] = 0;
}

}  // namespace mbda
