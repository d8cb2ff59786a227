#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

namespace resalloc {

// Per-edge utility families. Every member is non-negative, non-decreasing and
// concave on [0, inf).
enum class UtilityFamily { linear, sqrt, log1p, power, capped_quadratic };

struct UtilitySpec {
  UtilityFamily family = UtilityFamily::sqrt;
  // Power: exponent a in (0, 1]. CappedQuadratic: satiation scale b > 0.
  // Unused by the other families and kept at zero.
  double param = 0.0;

  static constexpr UtilitySpec linear() { return {UtilityFamily::linear, 0.0}; }
  static constexpr UtilitySpec sqrt() { return {UtilityFamily::sqrt, 0.0}; }
  static constexpr UtilitySpec log1p() { return {UtilityFamily::log1p, 0.0}; }
  static UtilitySpec power(double a) {
    if (!(a > 0.0 && a <= 1.0)) throw std::invalid_argument("power utility exponent must lie in (0, 1]");
    return {UtilityFamily::power, a};
  }
  static UtilitySpec capped_quadratic(double b) {
    if (!(b > 0.0)) throw std::invalid_argument("capped quadratic scale must be positive");
    return {UtilityFamily::capped_quadratic, b};
  }

  friend bool operator==(const UtilitySpec&, const UtilitySpec&) = default;
};

inline constexpr double kInfiniteAmount = std::numeric_limits<double>::infinity();

inline std::string_view family_name(UtilityFamily f) {
  switch (f) {
    case UtilityFamily::linear: return "linear";
    case UtilityFamily::sqrt: return "sqrt";
    case UtilityFamily::log1p: return "log1p";
    case UtilityFamily::power: return "power";
    case UtilityFamily::capped_quadratic: return "capped_quadratic";
  }
  return "unknown";
}

inline UtilityFamily parse_family(std::string_view name) {
  if (name == "linear") return UtilityFamily::linear;
  if (name == "sqrt") return UtilityFamily::sqrt;
  if (name == "log1p") return UtilityFamily::log1p;
  if (name == "power") return UtilityFamily::power;
  if (name == "capped_quadratic") return UtilityFamily::capped_quadratic;
  throw std::invalid_argument("unknown utility family '" + std::string(name) + "'");
}

inline bool has_param(UtilityFamily f) {
  return f == UtilityFamily::power || f == UtilityFamily::capped_quadratic;
}

/// Utility of interacting for `x` resource units.
inline double eval(const UtilitySpec& u, double x) {
  if (x < 0.0) throw std::domain_error("utility evaluated at a negative amount");
  switch (u.family) {
    case UtilityFamily::linear: return x;
    case UtilityFamily::sqrt: return std::sqrt(x);
    case UtilityFamily::log1p: return std::log1p(x);
    case UtilityFamily::power: return std::pow(x, u.param);
    case UtilityFamily::capped_quadratic: {
      const double b = u.param;
      if (x >= 0.5 * b) return 0.25 * b * b;
      return x * (b - x);
    }
  }
  return 0.0;
}

/// Right derivative of `eval` at `x`. Infinite at zero for sqrt and fractional
/// powers.
inline double marginal(const UtilitySpec& u, double x) {
  if (x < 0.0) throw std::domain_error("marginal evaluated at a negative amount");
  switch (u.family) {
    case UtilityFamily::linear: return 1.0;
    case UtilityFamily::sqrt: return x == 0.0 ? kInfiniteAmount : 0.5 / std::sqrt(x);
    case UtilityFamily::log1p: return 1.0 / (1.0 + x);
    case UtilityFamily::power: {
      const double a = u.param;
      if (a == 1.0) return 1.0;
      return x == 0.0 ? kInfiniteAmount : a * std::pow(x, a - 1.0);
    }
    case UtilityFamily::capped_quadratic: {
      const double b = u.param;
      return x >= 0.5 * b ? 0.0 : b - 2.0 * x;
    }
  }
  return 0.0;
}

/// Smallest x >= 0 with marginal(x) <= m, or kInfiniteAmount when the
/// marginal never falls that low.
inline double inverse_marginal(const UtilitySpec& u, double m) {
  if (m < 0.0) throw std::domain_error("inverse marginal of a negative level");
  switch (u.family) {
    case UtilityFamily::linear:
      return m >= 1.0 ? 0.0 : kInfiniteAmount;
    case UtilityFamily::sqrt:
      if (m == 0.0) return kInfiniteAmount;
      if (std::isinf(m)) return 0.0;
      return 0.25 / (m * m);
    case UtilityFamily::log1p:
      if (m >= 1.0) return 0.0;
      if (m == 0.0) return kInfiniteAmount;
      return 1.0 / m - 1.0;
    case UtilityFamily::power: {
      const double a = u.param;
      if (a == 1.0) return m >= 1.0 ? 0.0 : kInfiniteAmount;
      if (m == 0.0) return kInfiniteAmount;
      if (std::isinf(m)) return 0.0;
      return std::pow(m / a, 1.0 / (a - 1.0));
    }
    case UtilityFamily::capped_quadratic: {
      const double b = u.param;
      if (m >= b) return 0.0;
      return 0.5 * (b - m);
    }
  }
  return 0.0;
}

}  // namespace resalloc
