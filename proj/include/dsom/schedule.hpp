#ifndef DSOM_SCHEDULE_HPP
#define DSOM_SCHEDULE_HPP

#include "dsom/core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace dsom {

/**
 * Constants driving the per-epoch neighborhood radius and learning rate.
 *
 *   R(t) = R0 * base^(-t / lambda),  lambda = maxEpochs / log_base(R0)
 *   L(t) = L0 * base^(-t / maxEpochs)
 *
 * R decays from R0 to exactly 1 at t = maxEpochs. When R0 <= 1 the radius
 * time constant is undefined and the radius is held at R0 instead.
 */
struct DecaySchedule {
    double initialRadius = 1.0;
    double initialRate = 0.1;
    int maxEpochs = 1;
    double base = std::numbers::e;

    static DecaySchedule make(double initialRadius, double initialRate, int maxEpochs,
                              double base = std::numbers::e)
    {
        DecaySchedule s{initialRadius, initialRate, maxEpochs, base};
        s.validate();
        return s;
    }

    void validate() const
    {
        if (!(initialRadius > 0.0) || !std::isfinite(initialRadius))
            throw InputError("DecaySchedule: initial radius must be positive");
        if (!(initialRate > 0.0 && initialRate <= 1.0))
            throw InputError("DecaySchedule: initial learning rate must be in (0,1]");
        if (maxEpochs < 1)
            throw InputError("DecaySchedule: maxEpochs must be >= 1");
        if (!(base > 1.0) || !std::isfinite(base))
            throw InputError("DecaySchedule: base must be > 1");
    }

    bool radius_decays() const { return initialRadius > 1.0; }

    /// maxEpochs / log_base(R0); NaN when the radius does not decay.
    double radius_time_constant() const
    {
        if (!radius_decays())
            return std::nan("");
        return maxEpochs / (std::log(initialRadius) / std::log(base));
    }

    double rate_time_constant() const { return maxEpochs; }
};

/// Half the smaller lattice dimension.
inline double initial_radius(int rows, int cols)
{
    if (rows < 1 || cols < 1)
        throw InputError("initial_radius: rows and cols must be >= 1");
    return std::min(rows, cols) / 2.0;
}

namespace detail {
inline void check_epoch(int t, const DecaySchedule& s)
{
    if (t < 0 || t > s.maxEpochs)
        throw InputError("epoch " + std::to_string(t) + " outside [0, " + std::to_string(s.maxEpochs) + "]");
}
} // namespace detail

inline double radius_at(int t, const DecaySchedule& s)
{
    detail::check_epoch(t, s);
    if (!s.radius_decays())
        return s.initialRadius;
    return s.initialRadius * std::pow(s.base, -t / s.radius_time_constant());
}

inline double learning_rate_at(int t, const DecaySchedule& s)
{
    detail::check_epoch(t, s);
    return s.initialRate * std::pow(s.base, -t / s.rate_time_constant());
}

/// Attenuation of the update applied to a node at lattice distance d from the BMU.
inline double influence(double d, double radius, double base)
{
    if (!(radius > 0.0))
        throw InputError("influence: radius must be positive");
    if (!(d >= 0.0))
        throw InputError("influence: distance must be nonnegative");
    return std::pow(base, -d / (2.0 * radius));
}

} // namespace dsom

#endif // DSOM_SCHEDULE_HPP
