#pragma once

#include <boost/regex.hpp>

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mbda {

/// A compiled feature regular expression (Perl syntax).
///
/// Alongside the regex it keeps a literal that every match must contain,
/// when one can be derived from the pattern text. PatternSet uses these
/// literals to skip regex evaluation on lines that cannot match.
class Pattern {
 public:
  /// Throws std::invalid_argument with the engine message on a bad pattern.
  explicit Pattern(std::string source);

  const std::string& source() const { return source_; }
  const std::optional<std::string>& required_literal() const { return literal_; }
  /// Literal that every match starts with; `whole` when the pattern is only that literal.
  const std::optional<std::string>& leading_literal() const { return leading_; }
  bool is_literal() const { return whole_literal_; }
  std::size_t capture_groups() const { return regex_.mark_count(); }

  /// Number of non-overlapping occurrences in `text`.
  std::uint64_t count(std::string_view text) const;
  bool matches(std::string_view text) const;
  /// First capture group of the first match, if any.
  std::optional<std::string_view> first_capture(std::string_view text) const;

  const boost::regex& regex() const { return regex_; }

 private:
  std::string source_;
  boost::regex regex_;
  std::optional<std::string> literal_;
  std::optional<std::string> leading_;
  bool whole_literal_ = false;
};

/// Longest literal substring that every match of `pattern` must contain.
/// Conservative: returns nullopt whenever the pattern uses constructs the
/// scan does not model (top-level alternation, inline flags, ...).
std::optional<std::string> derive_required_literal(std::string_view pattern);

struct LeadingLiteral {
  std::string text;
  bool whole = false;  // the pattern is exactly this literal
};
/// Literal prefix of every match of `pattern`, under the same conservative rules.
std::optional<LeadingLiteral> derive_leading_literal(std::string_view pattern);

/// Multi-literal prefilter over a fixed list of patterns (Aho-Corasick
/// automaton over the required literals).
class PatternSet {
 public:
  PatternSet() = default;
  explicit PatternSet(std::vector<const Pattern*> patterns);

  std::size_t size() const { return patterns_.size(); }
  const Pattern& operator[](std::size_t i) const { return *patterns_[i]; }

  /// Marks in `candidates` every pattern that may match `text`. Patterns
  /// without a literal are always candidates.
  void candidates(std::string_view text, std::vector<std::uint8_t>& candidates) const;

  struct Scratch {
    std::vector<std::uint32_t> next;  // per pattern, first offset a new match may start at
    std::vector<std::uint8_t> search;
    std::vector<std::uint32_t> touched;
    std::vector<std::uint32_t> pending;
  };

  /// counts[i] += occurrences of pattern i in text.
  void count_into(std::string_view text, std::vector<std::uint64_t>& counts, Scratch& scratch) const;

 private:
  // kLiteral counts literal hits, kAnchored tries the regex only at hits of
  // its leading literal, kSearch runs the full regex once its literal is seen.
  enum class Mode : std::uint8_t { kLiteral, kAnchored, kSearch, kAlways };

  std::vector<const Pattern*> patterns_;
  std::vector<Mode> modes_;
  std::vector<std::uint32_t> literal_length_;                  // literal id -> byte length
  std::vector<std::size_t> always_;                            // patterns with no literal
  std::vector<std::vector<std::size_t>> literal_to_patterns_;  // literal id -> pattern ids
  struct Target {
    std::uint32_t pattern;
    std::uint32_t length;  // of the literal that ends at this state
  };

  // Aho-Corasick automaton as a DFA over byte classes: delta_[state * classes_ + class_[byte]].
  std::array<std::uint16_t, 256> class_{};
  std::size_t classes_ = 1;
  std::vector<std::int32_t> delta_;
  std::vector<std::uint32_t> target_offsets_;  // state -> range of targets_ (incl. suffix links)
  std::vector<Target> targets_;
};

}  // namespace mbda
