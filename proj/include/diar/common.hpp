#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace diar {

// Integer milliseconds. All timeline arithmetic happens in this fixed-point
// representation; floating seconds appear only at I/O boundaries.
using Millis = std::int64_t;

constexpr Millis kMillisPerSecond = 1000;

// Error raised by the file parsers. Carries the 1-based line number.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, int line)
      : std::runtime_error(message + " (line " + std::to_string(line) + ")"),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// Raised when inputs violate an operation's contract (bad dimensions,
// missing speakers, infeasible configuration).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Nearest-millisecond rounding, half away from zero.
Millis ms_from_seconds(double seconds);

// Exact decimal-text to milliseconds conversion ("12.3456" -> 12346).
// Avoids double round trips for file input. Throws std::invalid_argument
// on anything that is not a plain decimal number.
Millis ms_from_seconds_text(const std::string& text);

double seconds_from_ms(Millis ms);

// Fixed three decimals ("12.346"), the canonical on-disk time format.
std::string format_seconds(Millis ms);

void log_warning(const std::string& message);

std::uint64_t fnv1a64(const void* data, std::size_t len);
std::uint64_t fnv1a64(const std::string& s);

}  // namespace diar
