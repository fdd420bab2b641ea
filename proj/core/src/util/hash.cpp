#include "caer/util/hash.hpp"

#include <fmt/format.h>

namespace caer {

std::string hex64(std::uint64_t value) { return fmt::format("{:016x}", value); }

}  // namespace caer
