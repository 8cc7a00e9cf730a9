#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "dtvr/env/content.hpp"
#include "dtvr/error.hpp"

namespace dtvr {

struct LatencyRecord {
  double download = 0.0;  // T_d, s
  double render = 0.0;    // T_r, s
  double total = 0.0;     // T_d + T_r, s
  bool delivered = false;
  double threshold = 0.0; // T_th, s
};

struct QoERecord {
  double psnr = 0.0;
  double qoe = 0.0;
  double eps1 = 1.0;
};

inline LatencyRecord make_latency(double download, double render, double threshold) {
  LatencyRecord rec{download, render, download + render, false, threshold};
  rec.delivered = rec.total <= threshold;
  return rec;
}

// Binary-MSE PSNR: MSE is 0 on delivery and 1 on failure.
inline double psnr(bool delivered, double eps1) {
  require(eps1 > 0.0, Errc::InvalidArgument, "eps1 must be positive");
  const double mse = delivered ? 0.0 : 1.0;
  return 10.0 * std::log10((1.0 + eps1) / (mse + eps1));
}

/// Attention-weighted log-resolution term sum_a (a N_a / N) ln(b_a / b_th).
inline double perception_weight(const AttentionProfile& profile, const ResolutionAssignment& res,
                                int tiles, double b_th) {
  require(tiles > 0, Errc::InvalidArgument, "tile count must be positive");
  double sum = 0.0;
  for (int a = 0; a < kLevels; ++a) {
    if (profile.counts[a] == 0) continue;
    sum += (a + 1) * static_cast<double>(profile.counts[a]) / tiles * std::log(res.bits[a] / b_th);
  }
  return sum;
}

inline double qoe(double psnr_db, const AttentionProfile& profile, const ResolutionAssignment& res,
                  int tiles, double b_th) {
  if (psnr_db == 0.0) return 0.0;
  return psnr_db * perception_weight(profile, res, tiles, b_th);
}

/// 1 - 2 sigma / (H - L); defined as 1 when the QoE range is empty.
inline double horizon_fair_qoe(std::span<const double> avg_qoe, double highest, double lowest) {
  if (avg_qoe.empty() || !(highest > lowest)) return 1.0;
  double mean = 0.0;
  for (double q : avg_qoe) mean += q;
  mean /= static_cast<double>(avg_qoe.size());
  double var = 0.0;
  for (double q : avg_qoe) var += (q - mean) * (q - mean);
  var /= static_cast<double>(avg_qoe.size());
  return 1.0 - 2.0 * std::sqrt(var) / (highest - lowest);
}

// Running horizon statistics behind the fairness metric.
class FairnessTracker {
 public:
  explicit FairnessTracker(std::size_t users) : sums_(users, 0.0) {
    require(users >= 1, Errc::InvalidArgument, "fairness tracker needs at least one user");
  }

  double update(std::span<const double> qoe_per_user) {
    require(qoe_per_user.size() == sums_.size(), Errc::DimensionMismatch,
            "QoE vector length differs from user count");
    const auto [lo, hi] = std::minmax_element(qoe_per_user.begin(), qoe_per_user.end());
    lowest_ = lowest_ ? std::min(*lowest_, *lo) : *lo;
    highest_ = highest_ ? std::max(*highest_, *hi) : *hi;
    for (std::size_t k = 0; k < sums_.size(); ++k) sums_[k] += qoe_per_user[k];
    ++slots_;
    const auto avg = averages();
    hfqoe_ = horizon_fair_qoe(avg, *highest_, *lowest_);
    return hfqoe_;
  }

  std::vector<double> averages() const {
    std::vector<double> avg(sums_.size(), 0.0);
    if (slots_ == 0) return avg;
    for (std::size_t k = 0; k < sums_.size(); ++k) avg[k] = sums_[k] / static_cast<double>(slots_);
    return avg;
  }

  double average(std::size_t k) const {
    return slots_ == 0 ? 0.0 : sums_.at(k) / static_cast<double>(slots_);
  }

  std::optional<double> lowest() const { return lowest_; }
  std::optional<double> highest() const { return highest_; }
  long long slots() const { return slots_; }
  std::size_t users() const { return sums_.size(); }
  double hfqoe() const { return hfqoe_; }

 private:
  std::vector<double> sums_;
  std::optional<double> lowest_;
  std::optional<double> highest_;
  long long slots_ = 0;
  double hfqoe_ = 1.0;
};

}  // namespace dtvr
