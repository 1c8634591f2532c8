#include "diar/common.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <mutex>

namespace diar {

Millis ms_from_seconds(double seconds) {
  return static_cast<Millis>(std::llround(seconds * 1000.0));
}

Millis ms_from_seconds_text(const std::string& text) {
  if (text.empty()) throw std::invalid_argument("empty time field");
  std::size_t pos = 0;
  bool negative = false;
  if (text[pos] == '+' || text[pos] == '-') {
    negative = (text[pos] == '-');
    ++pos;
  }
  Millis whole = 0;
  std::size_t digits = 0;
  while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
    whole = whole * 10 + (text[pos] - '0');
    ++pos;
    ++digits;
  }
  Millis frac = 0;
  std::size_t frac_digits = 0;
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    // Keep three fractional digits, round half up on the fourth.
    int extra = -1;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
      if (frac_digits < 3) {
        frac = frac * 10 + (text[pos] - '0');
        ++frac_digits;
      } else if (extra < 0) {
        extra = text[pos] - '0';
      }
      ++pos;
      ++digits;
    }
    while (frac_digits < 3) {
      frac *= 10;
      ++frac_digits;
    }
    if (extra >= 5) ++frac;
  }
  if (digits == 0 || pos != text.size())
    throw std::invalid_argument("bad time value '" + text + "'");
  Millis ms = whole * 1000 + frac;
  return negative ? -ms : ms;
}

double seconds_from_ms(Millis ms) { return static_cast<double>(ms) / 1000.0; }

std::string format_seconds(Millis ms) {
  char buf[48];
  bool negative = ms < 0;
  Millis abs = negative ? -ms : ms;
  std::snprintf(buf, sizeof(buf), "%s%lld.%03lld", negative ? "-" : "",
                static_cast<long long>(abs / 1000),
                static_cast<long long>(abs % 1000));
  return buf;
}

void log_warning(const std::string& message) {
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  std::cerr << "[diar] warning: " << message << "\n";
}

std::uint64_t fnv1a64(const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

}  // namespace diar
