#pragma once
#include <cstdint>
#include <vector>

#include "fir.hpp"

namespace amfm {

struct SaConfig {
    int max_iterations = 50000;
    double step = 0.0;       // 0 -> default for the filter's bit width
    double c_exponent = 0.0; // 0 -> calibrated from a 100-proposal warm-up
    uint64_t rng_seed = 0;
};

struct SaResult {
    FirFilter filter;     // best-visited coefficients, same fixed-point format
    double objective = 0.0;
    double c_used = 0.0;
    double step_used = 0.0;
    int accepted = 0;
};

// Negated mean squared error between the zero-padded FFT magnitude of taps
// and ideal.magnitude; 0 is the attainable maximum.
double objective_mse(const std::vector<double>& taps, const IdealResponse& ideal);

// Default perturbation step for a b-bit coefficient grid.
double default_sa_step(int bits);

// Simulated annealing over fixed-point coefficient vectors. Each move bumps a
// uniformly chosen tap by +-step and its mirror tap by the opposite sign, so
// anti-symmetry is preserved exactly; moves leaving [-1, 1-step] are skipped.
// Worsening moves are accepted with p = min(1, (1+iter)^((fy-fx)*C)).
SaResult sa_refine(const FirFilter& filter, const IdealResponse& ideal, const SaConfig& config);

} // namespace amfm
