#pragma once

#include <array>
#include <cmath>

#include "dtvr/env/content.hpp"
#include "dtvr/error.hpp"

namespace dtvr {

// Downlink state of one user for one slot. All SI units.
struct ChannelState {
  double bandwidth = 0.0;     // B_k, Hz
  double power = 1.0;         // P_k, W
  double gain = 1.0;          // h_k, Rayleigh power gain
  double distance = 1.0;      // m
  double alpha = 4.0;         // path-loss exponent
  double interference = 0.0;  // I_k, W
  double noise = 0.0;         // sigma_k^2, W
  double rate_bias = 0.0;     // Delta R_k, bit/s
  double compression = 300.0; // omega
};

struct ComputeState {
  double frequency = 0.0;  // f_k, Hz
  double freq_bias = 0.0;  // Delta f_k, Hz
  double f_max = 0.0;
};

inline double dbm_to_watt(double dbm) { return std::pow(10.0, dbm / 10.0) * 1e-3; }

/// Shannon rate of the BS -> user link with path loss d^-alpha.
inline double transmission_rate(const ChannelState& ch) {
  require(ch.noise > 0.0, Errc::InvalidArgument, "noise power must be positive");
  require(ch.bandwidth >= 0.0, Errc::InvalidArgument, "bandwidth must be non-negative");
  const double received = ch.power * ch.gain * std::pow(ch.distance, -ch.alpha);
  return ch.bandwidth * std::log2(1.0 + received / (ch.interference + ch.noise));
}

// Download latency from the bias-calibrated rate.
inline double download_latency(double gop_bits, double rate, const ChannelState& ch) {
  const double effective = ch.compression * (rate - ch.rate_bias);
  if (!(effective > 0.0))
    throw Error(Errc::CalibratedRateNonPositive, "calibrated rate omega*(R - dR) must be positive");
  return gop_bits / effective;
}

inline double download_latency(double gop_bits, const ChannelState& ch) {
  return download_latency(gop_bits, transmission_rate(ch), ch);
}

inline double render_cycles(const std::array<double, kLevels>& gop_bits_per_level,
                            const std::array<double, kLevels>& cycles_per_bit) {
  double cycles = 0.0;
  for (int a = 0; a < kLevels; ++a) cycles += gop_bits_per_level[a] * cycles_per_bit[a];
  return cycles;
}

inline double render_latency(const std::array<double, kLevels>& gop_bits_per_level,
                             const std::array<double, kLevels>& cycles_per_bit,
                             const ComputeState& comp) {
  const double effective = comp.frequency - comp.freq_bias;
  if (!(effective > 0.0))
    throw Error(Errc::CalibratedFrequencyNonPositive, "calibrated frequency f - df must be positive");
  return render_cycles(gop_bits_per_level, cycles_per_bit) / effective;
}

}  // namespace dtvr
