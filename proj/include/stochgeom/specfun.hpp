#pragma once

// Special functions behind the closed-form expected norm: log-gamma ratios
// and the confluent hypergeometric function 1F1 (Kummer's M).

namespace stochgeom::specfun {

/// ln Γ(num) − ln Γ(den) for positive arguments, accurate when both are large
/// (Γ itself overflows double beyond ~171). Throws DomainError otherwise.
double log_gamma_ratio(double num, double den);

/// Relative size of the next series term below which summation stops.
inline constexpr double kSeriesTolerance = 1e-15;
/// Hard cap on the number of series terms.
inline constexpr int kMaxSeriesTerms = 10000;
/// For x < -kAsymptoticThreshold the large-argument expansion is tried first.
inline constexpr double kAsymptoticThreshold = 40.0;

/// Confluent hypergeometric function 1F1(a; b; x).
///
/// Accuracy is guaranteed for a in [-3, 1] with x <= 0 (the regime of the
/// expected norm and its derivative) and for small non-negative x. Negative
/// arguments go through the Kummer transform e^x 1F1(b−a; b; −x), whose series
/// has positive terms; the summation runs in log space once e^x would
/// underflow. Beyond kAsymptoticThreshold the Poincaré expansion
/// Γ(b)/Γ(b−a) (−x)^(−a) Σ (a)_s (1+a−b)_s / (s! (−x)^s) is used whenever its
/// terms fall below double precision before they start to grow; the long
/// positive series would otherwise accumulate rounding error.
///
/// Throws DomainError for b <= 0 and ConvergenceError when the series does
/// not settle within kMaxSeriesTerms terms.
double kummer_1f1(double a, double b, double x);

/// d/dx 1F1(a; b; x) = (a/b) 1F1(a+1; b+1; x).
double kummer_1f1_derivative(double a, double b, double x);

}  // namespace stochgeom::specfun
