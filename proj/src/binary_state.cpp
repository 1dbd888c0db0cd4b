#include "mpflow/binary_state.hpp"

#include <stdexcept>

namespace mpf {

void validate_state(const BinaryState& x) {
    if (x.size() < 1) throw std::invalid_argument("binary state must have d >= 1");
    for (std::uint8_t b : x.bits)
        if (b != 0 && b != 1) throw std::invalid_argument("binary state entries must be 0 or 1");
}

StateKey state_key(const BinaryState& x) {
    StateKey key((x.size() + 63) / 64, 0);
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x.bits[i]) key[i >> 6] |= (std::uint64_t{1} << (i & 63));
    return key;
}

BinaryState state_from_index(std::uint64_t index, std::size_t d) {
    BinaryState x(d);
    for (std::size_t i = 0; i < d; ++i) x.bits[i] = (index >> i) & 1u;
    return x;
}

std::uint64_t state_to_index(const BinaryState& x) {
    std::uint64_t idx = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x.bits[i]) idx |= (std::uint64_t{1} << i);
    return idx;
}

}  // namespace mpf
