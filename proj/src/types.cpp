#include "amst/types.hpp"

#include <algorithm>
#include <stdexcept>

namespace amst {

std::string toString(Weight w) {
  if (w == 0) return "0";
  std::string out;
  while (w != 0) {
    out.push_back(static_cast<char>('0' + static_cast<int>(w % 10)));
    w /= 10;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

Weight parseWeight(std::string_view text) {
  if (text.empty()) throw std::invalid_argument("empty weight");
  Weight value = 0;
  for (char c : text) {
    if (c < '0' || c > '9') throw std::invalid_argument("bad weight: " + std::string(text));
    Weight next = value * 10 + static_cast<unsigned>(c - '0');
    if (next / 10 != value) throw std::invalid_argument("weight overflow: " + std::string(text));
    value = next;
  }
  return value;
}

}  // namespace amst
