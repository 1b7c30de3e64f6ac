#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>

// Isotropic Gaussian kernel behind a small interface: log-density, gradient,
// radial envelopes and global derivative bounds. Everything downstream
// consumes log_density only; raw densities underflow at d=10 where squared
// distances can exceed 1400.

namespace npmle {

inline constexpr double kLog2Pi = 1.8378770664093454836;

enum class KernelFamily { IsotropicGaussian };

struct KernelSpec {
  int d = 1;
  KernelFamily family = KernelFamily::IsotropicGaussian;

  explicit KernelSpec(int dim = 1) : d(dim) {
    if (dim < 1) throw std::invalid_argument("kernel dimension must be >= 1");
  }

  // -(d/2) log(2*pi), the log normalizing constant
  double log_norm() const { return -0.5 * d * kLog2Pi; }
};

inline void check_dim(const KernelSpec& k, std::span<const double> z,
                      const char* who) {
  if (static_cast<int>(z.size()) != k.d)
    throw std::invalid_argument(std::string(who) + ": point has length " +
                                std::to_string(z.size()) + ", kernel is d=" +
                                std::to_string(k.d));
}

inline double squared_norm(std::span<const double> z) {
  double s = 0;
  for (double v : z) s += v * v;
  return s;
}

// log phi(z) = -(d/2) log(2*pi) - ||z||^2 / 2
inline double log_density(const KernelSpec& k, std::span<const double> z) {
  check_dim(k, z, "log_density");
  return k.log_norm() - 0.5 * squared_norm(z);
}

// grad phi(z) = -z * phi(z), written into out
inline void grad_density(const KernelSpec& k, std::span<const double> z,
                         std::span<double> out) {
  check_dim(k, z, "grad_density");
  if (out.size() != z.size())
    throw std::invalid_argument("grad_density: output length mismatch");
  const double p = std::exp(log_density(k, z));
  for (int i = 0; i < k.d; ++i) out[i] = -z[i] * p;
}

// Radial envelopes: sup of phi over ||x|| >= r and inf over ||x|| <= r.
// For the Gaussian both reduce to the density at radius r.
inline double envelope_upper(const KernelSpec& k, double r) {
  if (r < 0) throw std::invalid_argument("envelope_upper: r must be >= 0");
  return std::exp(k.log_norm() - 0.5 * r * r);
}

inline double envelope_lower(const KernelSpec& k, double r) {
  if (r < 0) throw std::invalid_argument("envelope_lower: r must be >= 0");
  return std::exp(k.log_norm() - 0.5 * r * r);
}

struct DerivativeBounds {
  double G = 0;  // sup ||grad phi||, attained at ||z|| = 1
  double H = 0;  // sup ||hess phi||, attained at z = 0
};

inline DerivativeBounds derivative_bounds(const KernelSpec& k) {
  DerivativeBounds b;
  b.G = std::exp(k.log_norm() - 0.5);
  b.H = std::exp(k.log_norm());
  return b;
}

}  // namespace npmle
