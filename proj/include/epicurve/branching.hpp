#pragma once

#include "epicurve/models.hpp"
#include "epicurve/rng.hpp"

#include <cstdint>
#include <vector>

namespace epicurve {

struct Birth {
    double time;
    int type;
    std::int64_t parent; ///< index into births, -1 for the root
};

/// Offspring already determined by a born parent but not yet born.
struct PendingBirth {
    double time;
    int type;
    std::int64_t parent;
};

struct BranchingRealization {
    std::vector<Birth> births;         ///< in birth order
    std::vector<PendingBirth> pending; ///< sorted by time
    double horizon = 0;
    bool extinct = false;
};

enum class Direction { Forward, Backward };

/// Stop after a number of births or at a time horizon.
struct StopRule {
    static StopRule count(std::int64_t n) { return {true, n, 0.0}; }
    static StopRule time(double t) { return {false, 0, t}; }
    bool by_count;
    std::int64_t births;
    double horizon;
};

struct BranchingOptions {
    std::int64_t population_cap = 10'000'000;
};

/// Forward (who-infects-whom) process started from one individual.
BranchingRealization simulate_forward(const ModelSpec& spec, StopRule stop, int initial_type, RandomStream& rng,
                                      const BranchingOptions& options = {});

/// Backward (susceptibility) process up to time T.
BranchingRealization simulate_backward(const ModelSpec& spec, double T, int initial_type, RandomStream& rng,
                                       const BranchingOptions& options = {});

/// One truncation estimate e^{-lambda T} B(T) of W or W-hat.
struct LimitSample {
    double value;
    double horizon;
    bool survived;
};

/**
 * n independent estimates of the limit variable. Sample i uses rng.split(i). For lattice models
 * the horizon is rounded up to a multiple of the lattice span.
 */
std::vector<LimitSample> sample_W(const ModelSpec& spec, Direction direction, double lambda, double T, int n,
                                  RandomStream& rng, int initial_type = 0, const BranchingOptions& options = {});

/// Smallest horizon T with e^{lambda T} >= 1e3, rounded to the lattice when needed.
double default_horizon(const ModelSpec& spec, double lambda, double growth = 1e3);

struct ResidualAgeLaws {
    std::vector<double> residuals; ///< scheduled birth time minus t, for parents born by t
    std::vector<double> ages;      ///< t minus birth time, for individuals born by t
    std::vector<int> residual_types;
    std::vector<int> age_types;
};

ResidualAgeLaws residual_and_age_laws(const BranchingRealization& realization, double t);

} // namespace epicurve
