#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tpm/error.hpp"
#include "tpm/model.hpp"

namespace tpm::query {

/// One position of a [b1,b2,b3,b4] interval as written in a query.
struct Slot {
  enum class Kind { Any, Fixed, Start, End };  // ?, tN / N, t, t+d
  Kind kind = Kind::Any;
  std::uint64_t ticks = 0;

  static Slot any() { return {}; }
  static Slot fixed(std::uint64_t t) { return {Kind::Fixed, t}; }
  static Slot start() { return {Kind::Start, 0}; }
  static Slot end() { return {Kind::End, 0}; }

  bool operator==(const Slot&) const = default;
};

/// Concrete interval: nullopt is a wildcard.
using Interval = std::array<std::optional<Timestamp>, 4>;

/// Window bound to `t` and `t+d` inside apply.
struct TimeContext {
  Timestamp start;
  std::uint64_t duration = 0;
};

inline Interval bind_slots(const std::array<Slot, 4>& slots, const std::optional<TimeContext>& ctx) {
  Interval out;
  for (std::size_t i = 0; i < 4; ++i) {
    switch (slots[i].kind) {
      case Slot::Kind::Any: break;
      case Slot::Kind::Fixed: out[i] = Timestamp{slots[i].ticks}; break;
      case Slot::Kind::Start:
      case Slot::Kind::End:
        if (!ctx) {
          throw Error(ErrorCode::UnboundTimeSymbol,
                      "'t' and 't+d' only have a value inside apply over a folder or path");
        }
        out[i] = slots[i].kind == Slot::Kind::Start ? ctx->start
                                                    : Timestamp{ctx->start.ticks + ctx->duration};
        break;
    }
  }
  return out;
}

/// Keyword rows: true marks a slot that takes the keyword's time argument.
using Template = std::array<bool, 4>;

inline constexpr std::array<std::string_view, 12> kTimeKeywords = {
    "in", "on", "at", "during", "since", "after", "before", "till", "until", "untill", "by", "between"};

inline bool is_time_keyword(std::string_view word) {
  for (auto k : kTimeKeywords)
    if (iequals(k, word)) return true;
  return false;
}

inline Template resolve_time_keyword(std::string_view keyword) {
  const std::string k = to_lower(keyword);
  if (k == "in" || k == "on" || k == "at" || k == "during") return {true, true, true, true};
  if (k == "since") return {true, true, false, false};
  if (k == "after") return {true, false, false, false};
  if (k == "before") return {false, false, false, true};
  if (k == "till" || k == "until" || k == "untill" || k == "by") return {false, false, true, true};
  if (k == "between") return {true, false, false, true};
  throw Error(ErrorCode::UnknownKeyword, "unknown time keyword '" + std::string(keyword) + "'");
}

/// Number of time arguments a keyword takes.
inline std::size_t keyword_arity(std::string_view keyword) {
  resolve_time_keyword(keyword);
  return iequals(keyword, "between") ? 2 : 1;
}

/// Fills a keyword template. `between` puts its two arguments in the first
/// and last slots; every other keyword repeats its one argument.
inline std::array<Slot, 4> instantiate(std::string_view keyword, const std::vector<Slot>& args) {
  const Template tpl = resolve_time_keyword(keyword);
  const std::size_t arity = keyword_arity(keyword);
  if (args.size() != arity) {
    throw Error(ErrorCode::ArityError, std::string(keyword) + " takes " + std::to_string(arity) +
                                           " time argument(s), got " + std::to_string(args.size()));
  }
  std::array<Slot, 4> out{};
  for (std::size_t i = 0; i < 4; ++i) {
    if (!tpl[i]) continue;
    out[i] = arity == 2 ? (i == 0 ? args[0] : args[1]) : args[0];
  }
  return out;
}

/// Point fact: b1 <= ts <= b4. Slots 2 and 3 bound durations only.
inline bool time_filter(Timestamp ts, const Interval& iv) {
  if (iv[0] && ts < *iv[0]) return false;
  if (iv[3] && ts > *iv[3]) return false;
  return true;
}

/// Durated fact [start, end]: start >= b1, end <= b4, and [b2, b3] must
/// contain the whole fact.
inline bool time_filter(Timestamp start, Timestamp end, const Interval& iv) {
  if (iv[0] && start < *iv[0]) return false;
  if (iv[3] && end > *iv[3]) return false;
  if (iv[1] && start < *iv[1]) return false;
  if (iv[2] && end > *iv[2]) return false;
  return true;
}

}  // namespace tpm::query
