#pragma once

// Fourier multipliers on the periodic extension of the truncated grid
// (period 2L), used by the implicit stepper, the frozen-coefficient
// operators and the weighted Sobolev norms.

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "stokes2p/geometry.hpp"

namespace stokes2p {

/// Angular wavenumber of FFT bin j; the Nyquist bin is reported as positive.
inline double wavenumber(const Grid& g, int j) {
    const int n = g.size();
    const int m = j <= n / 2 ? j : j - n;
    return std::numbers::pi * m / g.half_width;
}

inline Eigen::VectorXd wavenumbers(const Grid& g) {
    Eigen::VectorXd k(g.size());
    for (int j = 0; j < g.size(); ++j) k[j] = wavenumber(g, j);
    return k;
}

inline std::vector<std::complex<double>> fft_forward(const GridFunction& u) {
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> in(u.size()), out;
    for (Eigen::Index i = 0; i < u.size(); ++i) in[i] = u[i];
    fft.fwd(out, in);
    return out;
}

/// Real part of the inverse transform (includes the 1/N factor).
inline GridFunction fft_inverse_real(const std::vector<std::complex<double>>& spec) {
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> out;
    fft.inv(out, spec);
    GridFunction u(static_cast<Eigen::Index>(out.size()));
    for (std::size_t i = 0; i < out.size(); ++i) u[i] = out[i].real();
    return u;
}

/// Applies the symbol m(k) to u. The Nyquist bin is dropped for odd symbols
/// by passing odd = true.
template <class Symbol>
GridFunction apply_multiplier(const Grid& g, const GridFunction& u, Symbol&& m, bool odd = false) {
    auto spec = fft_forward(u);
    const int n = g.size();
    for (int j = 0; j < n; ++j) spec[j] *= (odd && j == n / 2) ? std::complex<double>(0.0) : m(wavenumber(g, j));
    return fft_inverse_real(spec);
}

/// |D| u
inline GridFunction abs_derivative(const Grid& g, const GridFunction& u) {
    return apply_multiplier(g, u, [](double k) { return std::complex<double>(std::abs(k)); });
}

/// Spectral d/dxi on the periodic extension.
inline GridFunction spectral_derivative(const Grid& g, const GridFunction& u) {
    return apply_multiplier(g, u, [](double k) { return std::complex<double>(0.0, k); }, true);
}

/// Discrete H^s norm with Fourier weight (1 + k^2)^s; s = 0 gives the flat L2 norm.
inline double sobolev_norm(const Grid& g, const GridFunction& u, double s) {
    const auto spec = fft_forward(u);
    const int n = g.size();
    double acc = 0.0;
    for (int j = 0; j < n; ++j) {
        const double k = wavenumber(g, j);
        acc += std::pow(1.0 + k * k, s) * std::norm(spec[j]);
    }
    return std::sqrt(g.spacing() * acc / n);
}

/// Dense real circulant matrix of the even multiplier m(k), i.e. F^-1 diag(m) F.
template <class Symbol> Eigen::MatrixXd multiplier_matrix(const Grid& g, Symbol&& m) {
    const int n = g.size();
    GridFunction e = GridFunction::Zero(n);
    e[0] = 1.0;
    const GridFunction col0 = apply_multiplier(g, e, [&](double k) { return std::complex<double>(m(k)); });
    Eigen::MatrixXd M(n, n);
    for (int c = 0; c < n; ++c)
        for (int r = 0; r < n; ++r) M(r, c) = col0[((r - c) % n + n) % n];
    return M;
}

} // namespace stokes2p
