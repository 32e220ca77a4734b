// SPDX-License-Identifier: Apache-2.0
#include "pathbench/codec.hpp"

namespace pathbench {

void CodecInfo::validate() const {
  if (name.empty()) throw ValidationError("codec info: empty name");
  if (!(quality_min < quality_max)) {
    throw ValidationError("codec info for '" + name + "': quality_min (" + std::to_string(quality_min) +
                          ") must be below quality_max (" + std::to_string(quality_max) + ")");
  }
  if (!can_encode && !can_decode) throw ValidationError("codec info for '" + name + "': no modes declared");
}

}  // namespace pathbench
