#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "holokan/error.hpp"
#include "holokan/random.hpp"

namespace holokan {

/// A point z = x + iy of the complex plane, or a velocity u + iv.
using Complex = std::complex<double>;

/// A complex map C -> C.
using VectorField = std::function<Complex(Complex)>;

inline bool is_finite(Complex z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

enum class SystemId { Quadratic, Cubic, Exponential, Sine, Cosine, MixedExp, PotentialFlow };

inline constexpr std::array<SystemId, 6> kPureSystems = {
    SystemId::Quadratic, SystemId::Cubic,  SystemId::Exponential,
    SystemId::Sine,      SystemId::Cosine, SystemId::MixedExp};

/// Coarse symbolic class of a velocity field.
enum class Family { PolyX2, PolyX3, Exponential, Trigonometric, MixedExp, Linear, Constant, Rational };

inline std::string_view family_name(Family f) {
  switch (f) {
    case Family::PolyX2: return "Polynomial (x^2)";
    case Family::PolyX3: return "Polynomial (x^3)";
    case Family::Exponential: return "Exponential";
    case Family::Trigonometric: return "Trigonometric";
    case Family::MixedExp: return "Mixed exp.";
    case Family::Linear: return "Linear";
    case Family::Constant: return "Constant";
    case Family::Rational: return "Rational";
  }
  return "?";
}

/// Axis-aligned square [lo, hi]^2.
struct SquareDomain {
  double lo = -2.0;
  double hi = 2.0;

  double width() const { return hi - lo; }
  double center() const { return 0.5 * (lo + hi); }
  bool contains(Complex z) const {
    return z.real() >= lo && z.real() <= hi && z.imag() >= lo && z.imag() <= hi;
  }
};

struct SystemSpec {
  SystemId id = SystemId::Quadratic;
  Complex c{-0.4, 0.6};
  double free_stream_u = 1.0;
  double radius_a = 1.0;
  Family family = Family::PolyX2;
  SquareDomain domain{};
  double exclusion_radius = 0.0;

  bool excluded(Complex z) const { return exclusion_radius > 0.0 && std::abs(z) <= exclusion_radius; }
};

inline std::string_view system_key(SystemId id) {
  switch (id) {
    case SystemId::Quadratic: return "quadratic";
    case SystemId::Cubic: return "cubic";
    case SystemId::Exponential: return "exp";
    case SystemId::Sine: return "sin";
    case SystemId::Cosine: return "cos";
    case SystemId::MixedExp: return "zexp";
    case SystemId::PotentialFlow: return "potential";
  }
  return "?";
}

inline std::string_view system_formula(SystemId id) {
  switch (id) {
    case SystemId::Quadratic: return "z^2 + c";
    case SystemId::Cubic: return "z^3 + c";
    case SystemId::Exponential: return "e^z + c";
    case SystemId::Sine: return "sin(z) + c";
    case SystemId::Cosine: return "cos(z) + c";
    case SystemId::MixedExp: return "z*e^z + c";
    case SystemId::PotentialFlow: return "U*z + U*a^2/z";
  }
  return "?";
}

inline SystemId parse_system_id(std::string_view key) {
  for (auto id : {SystemId::Quadratic, SystemId::Cubic, SystemId::Exponential, SystemId::Sine,
                  SystemId::Cosine, SystemId::MixedExp, SystemId::PotentialFlow}) {
    if (system_key(id) == key) return id;
  }
  throw ConfigError("unknown system '" + std::string(key) +
                    "' (expected quadratic|cubic|exp|sin|cos|zexp|potential)");
}

inline Family true_family(SystemId id) {
  switch (id) {
    case SystemId::Quadratic: return Family::PolyX2;
    case SystemId::Cubic: return Family::PolyX3;
    case SystemId::Exponential: return Family::Exponential;
    case SystemId::Sine:
    case SystemId::Cosine: return Family::Trigonometric;
    case SystemId::MixedExp: return Family::MixedExp;
    case SystemId::PotentialFlow: return Family::Rational;
  }
  return Family::Constant;
}

/// Default registry entry. The potential-flow exclusion disk is 1.1 a.
inline SystemSpec make_system(SystemId id, Complex c = {-0.4, 0.6}, double free_stream_u = 1.0,
                              double radius_a = 1.0, double exclusion_factor = 1.1) {
  SystemSpec spec;
  spec.id = id;
  spec.c = c;
  spec.free_stream_u = free_stream_u;
  spec.radius_a = radius_a;
  spec.family = true_family(id);
  spec.exclusion_radius = id == SystemId::PotentialFlow ? exclusion_factor * radius_a : 0.0;
  if (!is_finite(c)) throw ConfigError("system constant c must be finite");
  if (spec.exclusion_radius < 0.0 || spec.exclusion_radius >= 0.5 * spec.domain.width())
    throw ConfigError("exclusion radius must lie in [0, half the domain width)");
  return spec;
}

/// Closed-form field without any domain checks; may return non-finite values.
inline Complex evaluate_unchecked(const SystemSpec& spec, Complex z) {
  switch (spec.id) {
    case SystemId::Quadratic: return z * z + spec.c;
    case SystemId::Cubic: return z * z * z + spec.c;
    case SystemId::Exponential: return std::exp(z) + spec.c;
    case SystemId::Sine: return std::sin(z) + spec.c;
    case SystemId::Cosine: return std::cos(z) + spec.c;
    case SystemId::MixedExp: return z * std::exp(z) + spec.c;
    case SystemId::PotentialFlow: {
      const double u = spec.free_stream_u;
      const double a = spec.radius_a;
      return u * z + u * a * a / z;
    }
  }
  return {};
}

/// Ground-truth velocity f(z) = u + iv.
inline Complex velocity(const SystemSpec& spec, Complex z) {
  if (spec.excluded(z)) throw SingularInput("point lies inside the exclusion disk of the singular system");
  const Complex f = evaluate_unchecked(spec, z);
  if (!is_finite(f)) throw NonFinite("velocity is not finite");
  return f;
}

inline std::vector<Complex> velocities(const SystemSpec& spec, std::span<const Complex> points) {
  std::vector<Complex> out;
  out.reserve(points.size());
  for (Complex z : points) out.push_back(velocity(spec, z));
  return out;
}

/// The analytic map as an iterable field (non-finite values propagate).
inline VectorField analytic_field(const SystemSpec& spec) {
  return [spec](Complex z) { return evaluate_unchecked(spec, z); };
}

/// Uniform points over the domain, rejection-resampled out of the exclusion disk.
inline std::vector<Complex> sample_domain(const SystemSpec& spec, std::size_t n, Rng& rng) {
  std::vector<Complex> points;
  points.reserve(n);
  while (points.size() < n) {
    const double x = rng.uniform(spec.domain.lo, spec.domain.hi);
    const double y = rng.uniform(spec.domain.lo, spec.domain.hi);
    const Complex z{x, y};
    if (spec.excluded(z)) continue;
    points.push_back(z);
  }
  return points;
}

inline std::vector<Complex> sample_domain(const SystemSpec& spec, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  return sample_domain(spec, n, rng);
}

}  // namespace holokan
