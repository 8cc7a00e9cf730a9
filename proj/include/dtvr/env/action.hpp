#pragma once

#include <vector>

#include "dtvr/env/content.hpp"

namespace dtvr {

struct UserAllocation {
  ResolutionAssignment resolution;
  double bandwidth = 0.0;  // Hz
  double frequency = 0.0;  // Hz
};

// Decoded solution set {b, B, f} for all users of one slot.
struct ActionVector {
  std::vector<UserAllocation> users;

  double total_bandwidth() const {
    double s = 0.0;
    for (const auto& u : users) s += u.bandwidth;
    return s;
  }
  double total_frequency() const {
    double s = 0.0;
    for (const auto& u : users) s += u.frequency;
    return s;
  }
};

}  // namespace dtvr
