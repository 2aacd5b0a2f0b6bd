#pragma once

#include <algorithm>
#include <complex>
#include <cstddef>
#include <utility>
#include <vector>

#include "lyapunov/numerics.hpp"

namespace lyapunov {

/// Binary form sum_k c[k] z0^k z1^(deg-k); deg = size() - 1.
template <class C>
using Form = std::vector<C>;

// Scalar-type helpers shared by the hardware (std::complex) and
// multiprecision (Scalar) code paths.

inline double mag2(const std::complex<double>& z) { return std::norm(z); }
inline long double mag2(const std::complex<long double>& z) { return std::norm(z); }
inline Real mag2(const Scalar& z) { return abs2(z); }

inline std::complex<double> conjugate(const std::complex<double>& z) { return std::conj(z); }
inline std::complex<long double> conjugate(const std::complex<long double>& z) { return std::conj(z); }
inline Scalar conjugate(const Scalar& z) { return conj(z); }

inline bool is_exact_zero(const std::complex<double>& z) { return z.real() == 0 && z.imag() == 0; }
inline bool is_exact_zero(const std::complex<long double>& z) { return z.real() == 0 && z.imag() == 0; }
inline bool is_exact_zero(const Scalar& z) { return z.is_zero(); }

inline bool is_finite(const std::complex<double>& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }
inline bool is_finite(const Scalar& z) {
  return boost::multiprecision::isfinite(z.re) && boost::multiprecision::isfinite(z.im);
}

/// max(|re|, |im|); a cheap magnitude for renormalization.
inline double box_magnitude(const std::complex<double>& z) { return std::max(std::abs(z.real()), std::abs(z.imag())); }
inline long double box_magnitude(const std::complex<long double>& z) {
  return std::max(std::abs(z.real()), std::abs(z.imag()));
}
inline Real box_magnitude(const Scalar& z) {
  return boost::multiprecision::max(boost::multiprecision::abs(z.re), boost::multiprecision::abs(z.im));
}

template <class To>
To convert_scalar(const Scalar& z);

template <>
inline Scalar convert_scalar<Scalar>(const Scalar& z) {
  return z;
}
template <>
inline std::complex<double> convert_scalar<std::complex<double>>(const Scalar& z) {
  return {z.re.convert_to<double>(), z.im.convert_to<double>()};
}
template <>
inline std::complex<long double> convert_scalar<std::complex<long double>>(const Scalar& z) {
  return {z.re.convert_to<long double>(), z.im.convert_to<long double>()};
}

inline Scalar to_scalar(const std::complex<double>& z) { return Scalar(Real(z.real()), Real(z.imag())); }

template <class C>
int form_degree(const Form<C>& f) {
  return static_cast<int>(f.size()) - 1;
}

/// Homogeneous Horner evaluation.
template <class C>
C eval_form(const Form<C>& c, const C& x0, const C& x1) {
  const int deg = form_degree(c);
  C s = c[deg];
  C x1_power(1);
  for (int k = deg - 1; k >= 0; --k) {
    x1_power *= x1;
    s = s * x0 + c[k] * x1_power;
  }
  return s;
}

template <class C>
Form<C> multiply_forms(const Form<C>& a, const Form<C>& b) {
  Form<C> out(a.size() + b.size() - 1, C(0));
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (is_exact_zero(a[i])) continue;
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (is_exact_zero(b[j])) continue;
      out[i + j] += a[i] * b[j];
    }
  }
  return out;
}

/// Partial derivative with respect to z0.
template <class C>
Form<C> d0_form(const Form<C>& c) {
  const int deg = form_degree(c);
  if (deg == 0) return Form<C>{C(0)};
  Form<C> out(deg, C(0));
  for (int k = 1; k <= deg; ++k) out[k - 1] = c[k] * C(k);
  return out;
}

/// Partial derivative with respect to z1.
template <class C>
Form<C> d1_form(const Form<C>& c) {
  const int deg = form_degree(c);
  if (deg == 0) return Form<C>{C(0)};
  Form<C> out(deg, C(0));
  for (int k = 0; k < deg; ++k) out[k] = c[k] * C(deg - k);
  return out;
}

/// A pair of binary forms with cached partial derivatives.
template <class C>
struct FormKit {
  int degree = 0;
  Form<C> f0, f1;
  Form<C> d00, d01, d10, d11;  // d_ij = dF_i / dz_j

  FormKit() = default;
  FormKit(Form<C> a, Form<C> b) : degree(form_degree(a)), f0(std::move(a)), f1(std::move(b)) {
    d00 = d0_form(f0);
    d01 = d1_form(f0);
    d10 = d0_form(f1);
    d11 = d1_form(f1);
  }
};

/// (F0∘G, F1∘G) for forms F of degree d and G of degree D; the result has degree d·D.
template <class C>
std::pair<Form<C>, Form<C>> compose_forms(const Form<C>& f0, const Form<C>& f1, const Form<C>& g0,
                                          const Form<C>& g1) {
  const int d = form_degree(f0);
  std::vector<Form<C>> p0(d + 1), p1(d + 1);
  p0[0] = Form<C>{C(1)};
  p1[0] = Form<C>{C(1)};
  for (int k = 1; k <= d; ++k) {
    p0[k] = k == 1 ? g0 : multiply_forms(p0[k - 1], g0);
    p1[k] = k == 1 ? g1 : multiply_forms(p1[k - 1], g1);
  }
  const std::size_t out_size = static_cast<std::size_t>(d) * (g0.size() - 1) + 1;
  Form<C> r0(out_size, C(0)), r1(out_size, C(0));
  for (int k = 0; k <= d; ++k) {
    if (is_exact_zero(f0[k]) && is_exact_zero(f1[k])) continue;
    const Form<C> term = multiply_forms(p0[k], p1[d - k]);
    for (std::size_t i = 0; i < out_size; ++i) {
      if (is_exact_zero(term[i])) continue;
      if (!is_exact_zero(f0[k])) r0[i] += f0[k] * term[i];
      if (!is_exact_zero(f1[k])) r1[i] += f1[k] * term[i];
    }
  }
  return {std::move(r0), std::move(r1)};
}

}  // namespace lyapunov
