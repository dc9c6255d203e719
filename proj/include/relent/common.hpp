#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

namespace relent {

// Schema version stamped into every machine-readable report.
inline const char* report_schema_version() { return "1.0.0"; }

using BigInt = boost::multiprecision::cpp_int;
using Rat = boost::multiprecision::cpp_rational;

// Error taxonomy; `kind` is what the CLI maps to exit codes and the
// machine-readable error object.
struct Error : std::runtime_error {
  std::string kind;
  Error(std::string k, const std::string& msg)
      : std::runtime_error(msg), kind(std::move(k)) {}
};

inline Error validation_error(const std::string& msg) { return Error("validation", msg); }
inline Error cap_error(const std::string& msg) { return Error("cap", msg); }
inline Error io_error(const std::string& msg) { return Error("io", msg); }
inline Error numeric_error(const std::string& msg) { return Error("numeric", msg); }

template <class T>
std::string join(const std::vector<T>& v, const std::string& sep) {
  std::ostringstream os;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) os << sep;
    os << v[i];
  }
  return os.str();
}

// x log x with the 0 log 0 = 0 convention, natural log.
inline double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

inline double to_double(const Rat& q) {
  return static_cast<double>(boost::multiprecision::cpp_bin_float_50(q));
}

// Parses "3/4", "0.25", or "2" into an exact rational.
inline Rat parse_rational(const std::string& tok) {
  auto bad = [&] { return validation_error("cannot parse number '" + tok + "'"); };
  if (tok.empty()) throw bad();
  // decimal digits only; keeps the underlying bigint from accepting 0x/0b forms
  for (size_t i = 0; i < tok.size(); ++i) {
    char c = tok[i];
    bool ok = (c >= '0' && c <= '9') || c == '.' || c == '/' || (c == '-' && i == 0);
    if (!ok) throw bad();
  }
  auto slash = tok.find('/');
  try {
    if (slash != std::string::npos) {
      BigInt num(tok.substr(0, slash));
      BigInt den(tok.substr(slash + 1));
      if (den == 0) throw bad();
      return Rat(num, den);
    }
    auto dot = tok.find('.');
    if (dot == std::string::npos) return Rat(BigInt(tok), 1);
    std::string ip = tok.substr(0, dot), fp = tok.substr(dot + 1);
    bool neg = !ip.empty() && ip[0] == '-';
    if (ip.empty() || ip == "-") ip += "0";
    BigInt scale = 1;
    for (size_t i = 0; i < fp.size(); ++i) scale *= 10;
    BigInt whole(ip);
    BigInt frac = fp.empty() ? BigInt(0) : BigInt(fp);
    BigInt num = whole * scale + (neg ? -frac : frac);
    return Rat(num, scale);
  } catch (const std::exception&) {
    throw bad();
  }
}

inline std::string rat_to_string(const Rat& q) {
  std::ostringstream os;
  os << boost::multiprecision::numerator(q);
  if (boost::multiprecision::denominator(q) != 1)
    os << "/" << boost::multiprecision::denominator(q);
  return os.str();
}

}  // namespace relent
