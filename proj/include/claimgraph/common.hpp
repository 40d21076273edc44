#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace claimgraph {

using RecordId = std::uint64_t;

/// Base class for every error the library raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Calendar date stored as a day count since 1970-01-01.
class Date {
 public:
  constexpr Date() = default;
  constexpr explicit Date(std::int32_t days_since_epoch) : days_(days_since_epoch) {}
  Date(int year, unsigned month, unsigned day);

  /// Accepts "YYYY-MM-DD" optionally followed by a time part ("T..." or " ...").
  static std::optional<Date> parse(std::string_view text);
  /// Like parse() but throws Error on malformed input.
  static Date from_iso(std::string_view text);

  [[nodiscard]] std::string iso() const;
  [[nodiscard]] constexpr std::int32_t days() const { return days_; }
  [[nodiscard]] std::chrono::sys_days sys_days() const {
    return std::chrono::sys_days{std::chrono::days{days_}};
  }

  friend constexpr auto operator<=>(Date, Date) = default;

 private:
  std::int32_t days_ = 0;
};

/// Absolute whole-day difference.
inline int days_between(Date a, Date b) {
  const int diff = a.days() - b.days();
  return diff < 0 ? -diff : diff;
}

struct DateRange {
  Date start;
  Date end;

  [[nodiscard]] bool contains(Date d) const { return start <= d && d <= end; }
  friend bool operator==(const DateRange&, const DateRange&) = default;
};

}  // namespace claimgraph
