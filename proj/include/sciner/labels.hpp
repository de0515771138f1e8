#pragma once

// Label space for scientific entity tagging: 7 entity types in a BIO scheme
// (15 model classes) plus the `amb` marker produced by the confidence gate.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sciner/error.hpp"

namespace sciner {

enum class EntityType : std::uint8_t {
  MethodName = 0,
  TaskName = 1,
  DatasetName = 2,
  MetricName = 3,
  MetricValue = 4,
  HyperparameterName = 5,
  HyperparameterValue = 6,
};

inline constexpr int kNumEntityTypes = 7;
inline constexpr int kNumClasses = 15;

inline constexpr std::array<std::string_view, kNumEntityTypes> kEntityTypeNames = {
    "MethodName",  "TaskName",           "DatasetName",        "MetricName",
    "MetricValue", "HyperparameterName", "HyperparameterValue"};

inline std::string_view to_string(EntityType t) {
  return kEntityTypeNames[static_cast<int>(t)];
}

inline std::optional<EntityType> parse_entity_type(std::string_view s) {
  for (int i = 0; i < kNumEntityTypes; ++i)
    if (kEntityTypeNames[i] == s) return static_cast<EntityType>(i);
  return std::nullopt;
}

// Index layout: O = 0, B-<type> = 1 + type, I-<type> = 8 + type, amb = 15.
// Only indices 0..14 are classifier outputs.
class Label {
 public:
  constexpr Label() = default;

  static constexpr Label outside() { return Label(0); }
  static constexpr Label begin(EntityType t) { return Label(1 + static_cast<int>(t)); }
  static constexpr Label inside(EntityType t) { return Label(8 + static_cast<int>(t)); }
  static constexpr Label amb() { return Label(kAmbCode); }

  static Label from_index(int index) {
    if (index < 0 || index >= kNumClasses)
      throw ArgumentError("class index out of range: " + std::to_string(index));
    return Label(index);
  }

  constexpr bool is_outside() const { return code_ == 0; }
  constexpr bool is_begin() const { return code_ >= 1 && code_ <= 7; }
  constexpr bool is_inside() const { return code_ >= 8 && code_ <= 14; }
  constexpr bool is_amb() const { return code_ == kAmbCode; }
  constexpr bool is_entity() const { return is_begin() || is_inside(); }

  // Classifier index; undefined for amb.
  constexpr int index() const { return code_; }

  constexpr EntityType entity_type() const {
    return static_cast<EntityType>(is_begin() ? code_ - 1 : code_ - 8);
  }

  std::string str() const {
    if (is_outside()) return "O";
    if (is_amb()) return "amb";
    return std::string(is_begin() ? "B-" : "I-") + std::string(to_string(entity_type()));
  }

  friend constexpr bool operator==(Label a, Label b) = default;

 private:
  static constexpr std::uint8_t kAmbCode = 15;
  constexpr explicit Label(int code) : code_(static_cast<std::uint8_t>(code)) {}
  std::uint8_t code_ = 0;
};

inline std::optional<Label> parse_label(std::string_view s) {
  if (s == "O") return Label::outside();
  if (s == "amb") return Label::amb();
  if (s.size() > 2 && s[1] == '-' && (s[0] == 'B' || s[0] == 'I')) {
    auto t = parse_entity_type(s.substr(2));
    if (!t) return std::nullopt;
    return s[0] == 'B' ? Label::begin(*t) : Label::inside(*t);
  }
  return std::nullopt;
}

// Previous position in a sequence; nullopt means sequence start.
using PrevLabel = std::optional<Label>;
inline constexpr PrevLabel kSequenceStart = std::nullopt;

// O and SequenceStart admit only O or B-*; B-X and I-X admit O, any B-* and
// I-X. amb is a wildcard on both sides.
inline constexpr bool is_legal_transition(PrevLabel prev, Label next) {
  if (next.is_amb()) return true;
  if (!next.is_inside()) return true;
  if (!prev) return false;
  if (prev->is_amb()) return true;
  if (prev->is_outside()) return false;
  return prev->entity_type() == next.entity_type();
}

struct Violation {
  std::size_t position;
  PrevLabel prev;
  Label next;
};

inline std::vector<Violation> validate_sequence(const std::vector<Label>& labels) {
  std::vector<Violation> out;
  PrevLabel prev = kSequenceStart;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!is_legal_transition(prev, labels[i])) out.push_back({i, prev, labels[i]});
    prev = labels[i];
  }
  return out;
}

inline std::string describe(const Violation& v) {
  return "position " + std::to_string(v.position) + ": " +
         (v.prev ? v.prev->str() : std::string("<start>")) + " -> " + v.next.str();
}

struct Span {
  EntityType type;
  std::size_t start;  // inclusive
  std::size_t end;    // exclusive
  friend bool operator==(const Span&, const Span&) = default;
};

// Maximal B-then-I runs of one type. O and amb close an open span. An I-X
// that cannot continue the open span starts a new one, so illegal input still
// yields well-formed spans.
inline std::vector<Span> spans_from_labels(const std::vector<Label>& labels) {
  std::vector<Span> spans;
  std::optional<Span> open;
  auto close = [&](std::size_t at) {
    if (open) {
      open->end = at;
      spans.push_back(*open);
      open.reset();
    }
  };
  for (std::size_t i = 0; i < labels.size(); ++i) {
    Label l = labels[i];
    if (l.is_begin()) {
      close(i);
      open = Span{l.entity_type(), i, i};
    } else if (l.is_inside()) {
      if (open && open->type == l.entity_type()) continue;
      close(i);
      open = Span{l.entity_type(), i, i};
    } else {
      close(i);
    }
  }
  close(labels.size());
  return spans;
}

inline std::vector<Label> labels_from_spans(const std::vector<Span>& spans, std::size_t length) {
  std::vector<Label> labels(length, Label::outside());
  std::vector<bool> used(length, false);
  for (const Span& s : spans) {
    if (s.start >= s.end || s.end > length)
      throw ArgumentError("span [" + std::to_string(s.start) + ", " + std::to_string(s.end) +
                          ") invalid for length " + std::to_string(length));
    for (std::size_t i = s.start; i < s.end; ++i) {
      if (used[i]) throw ArgumentError("overlapping spans at position " + std::to_string(i));
      used[i] = true;
      labels[i] = i == s.start ? Label::begin(s.type) : Label::inside(s.type);
    }
  }
  return labels;
}

}  // namespace sciner
