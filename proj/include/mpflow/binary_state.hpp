#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <vector>

namespace mpf {

// State of a d-bit binary system. Entries are exactly 0 or 1.
struct BinaryState {
    std::vector<std::uint8_t> bits;

    BinaryState() = default;
    explicit BinaryState(std::size_t d) : bits(d, 0) {}
    BinaryState(std::initializer_list<int> vals) {
        bits.reserve(vals.size());
        for (int v : vals) bits.push_back(static_cast<std::uint8_t>(v));
    }

    std::size_t size() const { return bits.size(); }
    std::uint8_t operator[](std::size_t i) const { return bits[i]; }
    void set(std::size_t i, bool on) { bits[i] = on ? 1 : 0; }
    void flip(std::size_t k) { bits[k] ^= 1u; }

    BinaryState flipped(std::size_t k) const {
        BinaryState y = *this;
        y.flip(k);
        return y;
    }

    BinaryState complement() const {
        BinaryState y = *this;
        for (auto& b : y.bits) b ^= 1u;
        return y;
    }

    bool operator==(const BinaryState&) const = default;
};

// Throws std::invalid_argument if d < 1 or any entry is not 0/1.
void validate_state(const BinaryState& x);

// Bit-packed word representation used for hashing and set membership.
using StateKey = std::vector<std::uint64_t>;

StateKey state_key(const BinaryState& x);

inline void flip_key_bit(StateKey& key, std::size_t k) {
    key[k >> 6] ^= (std::uint64_t{1} << (k & 63));
}

struct StateKeyHash {
    std::size_t operator()(const StateKey& key) const {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (std::uint64_t w : key) {
            h ^= w;
            h *= 0x100000001b3ULL;
        }
        return static_cast<std::size_t>(h);
    }
};

// Bit i of `index` becomes x_i. Used by exhaustive enumeration; requires d <= 63.
BinaryState state_from_index(std::uint64_t index, std::size_t d);
std::uint64_t state_to_index(const BinaryState& x);

}  // namespace mpf
