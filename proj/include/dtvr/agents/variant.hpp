#pragma once

#include <array>
#include <string>
#include <string_view>

#include "dtvr/error.hpp"
#include "dtvr/replay/replay_buffer.hpp"

namespace dtvr {

enum class Variant { Fper, Per, Cddpg, OfflineDdpg, AvgAlloc, Fixed2K };

inline constexpr std::array<Variant, 6> kAllVariants{Variant::Fper,        Variant::Per,      Variant::Cddpg,
                                                     Variant::OfflineDdpg, Variant::AvgAlloc, Variant::Fixed2K};

inline std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::Fper: return "fper";
    case Variant::Per: return "per";
    case Variant::Cddpg: return "cddpg";
    case Variant::OfflineDdpg: return "offline_ddpg";
    case Variant::AvgAlloc: return "avg_alloc";
    case Variant::Fixed2K: return "fixed_2k";
  }
  return "?";
}

inline Variant parse_variant(std::string_view name) {
  for (Variant v : kAllVariants)
    if (to_string(v) == name) return v;
  throw Error(Errc::InvalidArgument, "unknown variant '" + std::string(name) +
                                         "' (expected fper, per, cddpg, offline_ddpg, avg_alloc, fixed_2k)");
}

inline bool is_learner(Variant v) {
  return v == Variant::Fper || v == Variant::Per || v == Variant::Cddpg || v == Variant::OfflineDdpg;
}

inline ReplayMode replay_mode(Variant v) {
  switch (v) {
    case Variant::Fper: return ReplayMode::Fper;
    case Variant::Per: return ReplayMode::Per;
    default: return ReplayMode::Uniform;
  }
}

}  // namespace dtvr
