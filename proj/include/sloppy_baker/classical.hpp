#pragma once

// Classical sloppy baker map on the unit torus, its exact Frobenius-Perron
// pushforward on aligned grids, the invariant density and periodic orbits.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "errors.hpp"

namespace sloppy_baker {

/// Point of the half-open unit square [0,1)^2.
struct PhasePoint {
    double q = 0.0;
    double p = 0.0;
};

inline double wrap_unit(double x) {
    double r = x - std::floor(x);
    return r >= 1.0 ? 0.0 : r;
}

/// Distance on the unit torus.
inline double torus_distance(const PhasePoint& a, const PhasePoint& b) {
    auto circular = [](double x, double y) {
        const double d = std::abs(wrap_unit(x) - wrap_unit(y));
        return std::min(d, 1.0 - d);
    };
    return std::hypot(circular(a.q, b.q), circular(a.p, b.p));
}

class SloppyParams {
public:
    explicit SloppyParams(double delta = 0.0) : delta_(delta) {
        detail::require(std::isfinite(delta) && delta >= 0.0 && delta <= 1.0,
                        "sloppy parameter delta must lie in [0, 1]");
    }
    double delta() const noexcept { return delta_; }

private:
    double delta_;
};

/// (q, p) -> (2q - [2q], (p + [2q](1 - delta)) / 2).
inline PhasePoint sloppy_map(PhasePoint x, const SloppyParams& params) {
    const double branch = std::floor(2.0 * x.q);
    return {wrap_unit(2.0 * x.q - branch), 0.5 * (x.p + branch * (1.0 - params.delta()))};
}

/// The reversible baker transformation (delta = 0).
inline PhasePoint baker_step(PhasePoint x) { return sloppy_map(x, SloppyParams(0.0)); }

// ---------------------------------------------------------------------------
// Densities

/// Piecewise-constant density on an M x M grid. Cell (i, j) covers
/// [i/M, (i+1)/M) x [j/M, (j+1)/M) in (q, p); storage is q-major.
class ClassicalDensity {
public:
    ClassicalDensity() = default;

    ClassicalDensity(int resolution, std::vector<double> values)
        : resolution_(resolution), values_(std::move(values)) {
        detail::require(resolution > 0 && resolution % 2 == 0,
                        "density resolution M must be a positive even integer");
        detail::require(values_.size() == static_cast<std::size_t>(resolution) * resolution,
                        "density needs M*M values");
        for (double v : values_) {
            detail::require(std::isfinite(v) && v >= 0.0, "density values must be finite and nonnegative");
        }
        detail::require(std::abs(total_mass() - 1.0) <= 1e-12 * std::max(1.0, static_cast<double>(values_.size()) / 1e4),
                        "density must integrate to 1 (got " + std::to_string(total_mass()) + ")");
    }

    /// Builds without the normalization check; used for intermediate sums.
    static ClassicalDensity unnormalized(int resolution, std::vector<double> values) {
        ClassicalDensity d;
        d.resolution_ = resolution;
        d.values_ = std::move(values);
        return d;
    }

    int resolution() const noexcept { return resolution_; }
    double operator()(int i, int j) const { return values_[index(i, j)]; }
    const std::vector<double>& values() const noexcept { return values_; }

    double total_mass() const {
        double sum = 0.0;
        for (double v : values_) sum += v;
        return sum / (static_cast<double>(resolution_) * resolution_);
    }

    /// Mass in cells whose lower p edge is >= p_min.
    double mass_above(double p_min) const {
        const int m = resolution_;
        double sum = 0.0;
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < m; ++j) {
                if (static_cast<double>(j) / m >= p_min - 1e-15) sum += (*this)(i, j);
            }
        }
        return sum / (static_cast<double>(m) * m);
    }

private:
    std::size_t index(int i, int j) const {
        return static_cast<std::size_t>(i) * static_cast<std::size_t>(resolution_) + static_cast<std::size_t>(j);
    }

    int resolution_ = 0;
    std::vector<double> values_;
};

inline double l1_distance(const ClassicalDensity& a, const ClassicalDensity& b) {
    detail::require(a.resolution() == b.resolution(), "l1_distance: resolutions differ");
    double sum = 0.0;
    for (std::size_t k = 0; k < a.values().size(); ++k) sum += std::abs(a.values()[k] - b.values()[k]);
    return sum / (static_cast<double>(a.resolution()) * a.resolution());
}

inline ClassicalDensity uniform_density(int resolution) {
    return ClassicalDensity(resolution,
                            std::vector<double>(static_cast<std::size_t>(resolution) * resolution, 1.0));
}

/// All mass in the single cell containing x.
inline ClassicalDensity point_mass_density(int resolution, PhasePoint x) {
    std::vector<double> values(static_cast<std::size_t>(resolution) * resolution, 0.0);
    const int i = std::min(resolution - 1, static_cast<int>(std::floor(wrap_unit(x.q) * resolution)));
    const int j = std::min(resolution - 1, static_cast<int>(std::floor(wrap_unit(x.p) * resolution)));
    values[static_cast<std::size_t>(i) * resolution + j] = static_cast<double>(resolution) * resolution;
    return ClassicalDensity(resolution, std::move(values));
}

/// Periodized isotropic Gaussian centred at `center` with per-axis variance
/// 1/(4 pi N), the footprint of an N-dimensional coherent state. Cell values
/// are midpoint samples renormalized to unit mass.
inline ClassicalDensity gaussian_density(int resolution, PhasePoint center, int hilbert_dim) {
    detail::require(hilbert_dim > 0, "gaussian_density: N must be positive");
    const double variance = 1.0 / (4.0 * std::numbers::pi * hilbert_dim);
    auto periodic = [&](double x, double c) {
        double acc = 0.0;
        for (int w = -3; w <= 3; ++w) {
            const double d = x - c + w;
            acc += std::exp(-d * d / (2.0 * variance));
        }
        return acc;
    };
    std::vector<double> qs(static_cast<std::size_t>(resolution)), ps(static_cast<std::size_t>(resolution));
    for (int i = 0; i < resolution; ++i) {
        const double mid = (i + 0.5) / resolution;
        qs[static_cast<std::size_t>(i)] = periodic(mid, center.q);
        ps[static_cast<std::size_t>(i)] = periodic(mid, center.p);
    }
    std::vector<double> values(static_cast<std::size_t>(resolution) * resolution);
    double sum = 0.0;
    for (int i = 0; i < resolution; ++i) {
        for (int j = 0; j < resolution; ++j) {
            const double v = qs[static_cast<std::size_t>(i)] * ps[static_cast<std::size_t>(j)];
            values[static_cast<std::size_t>(i) * resolution + j] = v;
            sum += v;
        }
    }
    const double scale = static_cast<double>(resolution) * resolution / sum;
    for (double& v : values) v *= scale;
    return ClassicalDensity(resolution, std::move(values));
}

enum class GridAlignment {
    strict,         // M * delta / 2 must be an integer
    area_weighted,  // split mass between the two receiving rows
};

namespace detail {

inline std::string nearest_aligned_delta(double delta, int resolution) {
    const double aligned = std::round(resolution * delta / 2.0) * 2.0 / resolution;
    return std::to_string(aligned);
}

} // namespace detail

/// One step of the Frobenius-Perron operator. On an aligned grid the map is
/// affine on each vertical half, so every source cell (i, j) sends half of its
/// mass to cells (2i - b M, floor(j/2) + b (M/2 - s)) and the q-neighbour,
/// where b is the half index and s = M delta / 2.
inline ClassicalDensity frobenius_perron_step(const ClassicalDensity& f, const SloppyParams& params,
                                              GridAlignment alignment = GridAlignment::strict) {
    const int m = f.resolution();
    const double shift = m * params.delta() / 2.0;
    if (alignment == GridAlignment::strict && !detail::is_integer_value(shift)) {
        throw PreconditionError("frobenius_perron_step: M*delta/2 = " + std::to_string(shift) +
                                " is not an integer; nearest aligned delta for M=" + std::to_string(m) +
                                " is " + detail::nearest_aligned_delta(params.delta(), m) +
                                " (or use area-weighted alignment)");
    }
    std::vector<double> out(static_cast<std::size_t>(m) * m, 0.0);
    auto deposit = [&](int i, int j, double amount) {
        out[static_cast<std::size_t>(i) * m + static_cast<std::size_t>(j)] += amount;
    };
    const int half = m / 2;
    for (int i = 0; i < m; ++i) {
        const int branch = i >= half ? 1 : 0;
        const int target_q = 2 * i - branch * m;
        // image of row j occupies p*M in [j/2 + offset, j/2 + offset + 1/2)
        const double offset = branch * (half - shift);
        for (int j = 0; j < m; ++j) {
            const double value = f(i, j);
            if (value == 0.0) continue;
            const double lo = 0.5 * j + offset;
            const double hi = lo + 0.5;
            const int row_lo = static_cast<int>(std::floor(lo + 1e-12));
            const int row_hi = static_cast<int>(std::ceil(hi - 1e-12)) - 1;
            for (int row = row_lo; row <= row_hi; ++row) {
                const double overlap = std::min(hi, row + 1.0) - std::max(lo, static_cast<double>(row));
                if (overlap <= 0.0) continue;
                // the image strip keeps density `value`; a cell it covers to height
                // `overlap` (in row units) gains value * overlap on average
                const double amount = value * overlap;
                const int r = std::clamp(row, 0, m - 1);
                deposit(target_q, r, amount);
                deposit(target_q + 1, r, amount);
            }
        }
    }
    return ClassicalDensity::unnormalized(m, std::move(out));
}

/// f* = 1/(1 - delta) on p < 1 - delta and 0 above.
inline ClassicalDensity invariant_density(const SloppyParams& params, int resolution) {
    detail::require(resolution > 0 && resolution % 2 == 0, "invariant_density: M must be positive and even");
    detail::require(params.delta() < 1.0, "invariant_density: delta = 1 has a singular invariant measure");
    const double support = resolution * (1.0 - params.delta());
    if (!detail::is_integer_value(support)) {
        throw PreconditionError("invariant_density: M*(1-delta) = " + std::to_string(support) +
                                " is not an integer; nearest aligned delta for M=" + std::to_string(resolution) +
                                " is " + detail::nearest_aligned_delta(params.delta(), resolution));
    }
    const int rows = static_cast<int>(std::lround(support));
    const double level = 1.0 / (1.0 - params.delta());
    std::vector<double> values(static_cast<std::size_t>(resolution) * resolution, 0.0);
    for (int i = 0; i < resolution; ++i) {
        for (int j = 0; j < rows; ++j) values[static_cast<std::size_t>(i) * resolution + j] = level;
    }
    return ClassicalDensity(resolution, std::move(values));
}

// ---------------------------------------------------------------------------
// Periodic orbits

/// Integer whose `bits`-bit binary representation is that of n reversed.
inline std::uint64_t bit_reverse(std::uint64_t n, int bits) {
    detail::require(bits >= 1 && bits <= 62, "bit_reverse: bit count must lie in [1, 62]");
    detail::require(n < (std::uint64_t{1} << bits), "bit_reverse: n must be below 2^bits");
    std::uint64_t r = 0;
    for (int b = 0; b < bits; ++b) {
        r = (r << 1) | ((n >> b) & 1u);
    }
    return r;
}

struct PeriodicOrbit {
    int period = 1;             // primitive period, divides the requested T
    std::uint64_t label = 0;    // n of points[0]
    std::vector<PhasePoint> points;
};

/// Seed point of label n for period T: (n / (2^T - 1), r(n) (1 - delta) / (2^T - 1)).
inline PhasePoint orbit_seed(std::uint64_t n, int period, const SloppyParams& params) {
    const double denom = static_cast<double>((std::uint64_t{1} << period) - 1);
    return {static_cast<double>(n) / denom,
            static_cast<double>(bit_reverse(n, period)) * (1.0 - params.delta()) / denom};
}

/// Every distinct cycle whose primitive period divides T. Labels run over
/// 0..2^T-2 (2^T-1 aliases q = 1 == 0); rotations of one cycle are reported
/// once, labelled by the smallest member. Points are listed in map order.
inline std::vector<PeriodicOrbit> periodic_orbits(int period, const SloppyParams& params) {
    detail::require(period >= 1 && period <= 20, "periodic_orbits: T must lie in [1, 20]");
    const std::uint64_t modulus = (std::uint64_t{1} << period) - 1;
    auto rotate_left = [&](std::uint64_t n) { return (2 * n) % modulus; };
    const std::uint64_t count = modulus == 1 ? 1 : modulus;  // T = 1: only n = 0

    std::vector<PeriodicOrbit> orbits;
    std::vector<bool> seen(static_cast<std::size_t>(count), false);
    // floating iteration loses one bit per doubling
    const double verify_tol = std::max(1e-12, 8.0 * std::ldexp(1.0, period) * 2.2e-16);
    for (std::uint64_t n = 0; n < count; ++n) {
        if (seen[static_cast<std::size_t>(n)]) continue;
        PeriodicOrbit orbit;
        orbit.label = n;
        std::uint64_t member = n;
        do {
            seen[static_cast<std::size_t>(member)] = true;
            orbit.points.push_back(orbit_seed(member, period, params));
            member = rotate_left(member);
        } while (member != n);
        orbit.period = static_cast<int>(orbit.points.size());

        for (const auto& start : orbit.points) {
            PhasePoint x = start;
            for (int t = 0; t < period; ++t) x = sloppy_map(x, params);
            if (torus_distance(x, start) > verify_tol) {
                throw NumericalError("periodic_orbits: seed " + std::to_string(n) + " failed verification");
            }
        }
        orbits.push_back(std::move(orbit));
    }
    return orbits;
}

} // namespace sloppy_baker
