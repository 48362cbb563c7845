#pragma once

// Reference values produced by tests/oracles/compute_oracles.py (mpmath,
// 20-30 digits, plus one numpy Monte Carlo). None of them is computed by the
// library under test.

namespace frozen {

inline constexpr double kCH_010 = 0.045156991435727806727;
inline constexpr double kCH_025 = 0.099735570100358169485;
inline constexpr double kCH_040 = 0.14097922649999518954;

// variance of the stochastic convolution at t = 1, H = 0.25
inline constexpr double kHeatVariance_t1_H025 = 0.2906841585095593;  // closed form
inline constexpr double kHeatVarianceBrute_t1_H025 = 0.29068415850955929;  // nested quadrature
inline constexpr double kWaveVariance_t1_H025 = 0.2357022603955158;

// R(0) - R(x) at t = 1, H = 0.25, x = 0.5
inline constexpr double kWaveGap_t1_H025_x05 = 0.1712304397630753;  // Mellin transforms
inline constexpr double kWaveGapMonteCarlo_t1_H025_x05 = 0.1711439106;
inline constexpr double kWaveGapMonteCarloSE = 0.0000830990;
inline constexpr double kHeatGap_t1_H025_x05 = 0.1722699820691713;  // 1F1 and split quadrature

// isometry targets for the three test integrands, H = 0.1, 0.25, 0.4
inline constexpr double kIsometry[3][3] = {
    {0.2828972351555691, 0.6822039358454135, 0.2179695347770397},
    {0.6457378441175215, 1.439842572470765, 0.3892032596198292},
    {0.9997093652517295, 1.978686623885109, 0.4513417928349583},
};
inline constexpr double kIsometryH[3] = {0.1, 0.25, 0.4};

}  // namespace frozen
