#ifndef CVNOISE_TESTS_ORACLES_HPP
#define CVNOISE_TESTS_ORACLES_HPP

// Independent closed forms used as test oracles. Nothing here calls into the
// network or element code.

#include <cmath>
#include <complex>
#include <random>

namespace oracle
{

using Complex = std::complex<double>;

struct MzCoefficients
{
    Complex src, vac, oc, loss;
};

// Fully expanded amplitude-quadrature output of the single-OPA Mach-Zehnder.
inline MzCoefficients mach_zehnder_plus(double e1, double e2, double kic, double koc, double kloss, double g,
                                        double omega, double phi)
{
    const double kappa = kic + koc + kloss;
    const Complex d(kappa - g, omega);
    const Complex rot = std::polar(1.0, -phi);
    const double seed = std::sqrt(4.0 * kic * koc);
    MzCoefficients c;
    c.src = (std::sqrt((1.0 - e1) * e2) * seed - std::sqrt(e1 * (1.0 - e2)) * d * rot) / d;
    c.vac = (std::sqrt(e1 * e2) * seed + std::sqrt((1.0 - e1) * (1.0 - e2)) * d * rot) / d;
    c.oc = std::sqrt(e2) * Complex(2.0 * koc - kappa + g, -omega) / d;
    c.loss = std::sqrt(e2) * std::sqrt(4.0 * kloss * koc) / d;
    return c;
}

// Exact cancellation at finite Omega: phi rotates the reference to the phase of
// (kappa - g + i Omega), epsilon1 balances the magnitudes.
inline void finite_omega_cancellation(double e2, double kic, double koc, double kloss, double g, double omega,
                                      double& e1, double& phi)
{
    const double kappa = kic + koc + kloss;
    const double kg = kappa - g;
    const double x = e2 * 4.0 * kic * koc / ((1.0 - e2) * (kg * kg + omega * omega));
    e1 = x / (1.0 + x);
    phi = std::atan2(omega, kg);
}

// Least-squares slope of log(y) against log(x).
template <typename Xs, typename Ys>
double loglog_slope(const Xs& xs, const Ys& ys)
{
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i)
    {
        const double lx = std::log(xs[i]);
        const double ly = std::log(ys[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

} // namespace oracle

#endif
