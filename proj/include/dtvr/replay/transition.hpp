#pragma once

#include <istream>
#include <ostream>
#include <vector>

#include "dtvr/binary_io.hpp"

namespace dtvr {

// {S(t), A(t), R(t), S(t+1)} with normalized state and raw action.
struct Transition {
  std::vector<double> state;
  std::vector<double> action;
  double reward = 0.0;
  std::vector<double> next_state;

  bool operator==(const Transition&) const = default;
};

inline void write_item(std::ostream& out, const Transition& t) {
  bin::write_vector(out, t.state);
  bin::write_vector(out, t.action);
  bin::write(out, t.reward);
  bin::write_vector(out, t.next_state);
}

inline void read_item(std::istream& in, Transition& t) {
  t.state = bin::read_vector<double>(in, 1u << 20);
  t.action = bin::read_vector<double>(in, 1u << 20);
  t.reward = bin::read<double>(in);
  t.next_state = bin::read_vector<double>(in, 1u << 20);
}

}  // namespace dtvr
