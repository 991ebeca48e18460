#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>

namespace compass {

/// Mersenne prime 2^61 - 1; all polynomial hashing happens in this field.
inline constexpr std::uint64_t kMersenne61 = (std::uint64_t{1} << 61) - 1;

namespace detail {

constexpr std::uint64_t reduce61(std::uint64_t x) noexcept {
    std::uint64_t r = (x & kMersenne61) + (x >> 61);
    return r >= kMersenne61 ? r - kMersenne61 : r;
}

constexpr std::uint64_t mulmod61(std::uint64_t a, std::uint64_t b) noexcept {
    unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
    std::uint64_t lo = static_cast<std::uint64_t>(p) & kMersenne61;
    std::uint64_t hi = static_cast<std::uint64_t>(p >> 61);
    return reduce61(lo + hi);
}

constexpr std::uint64_t addmod61(std::uint64_t a, std::uint64_t b) noexcept {
    return reduce61(a + b);
}

constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace detail

/// FNV-1a over raw bytes. Used both to name edges in seed derivation and to
/// canonicalize text join keys, so it must never change.
constexpr std::uint64_t fnv1a64(std::string_view bytes) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Degree-3 polynomial over GF(2^61-1): a 4-wise independent family.
struct XiSeed {
    std::array<std::uint64_t, 4> coefficients{};
    friend bool operator==(const XiSeed&, const XiSeed&) = default;
};

/// Degree-1 polynomial over GF(2^61-1): a 2-universal family.
struct HashSeed {
    std::array<std::uint64_t, 2> coefficients{};
    friend bool operator==(const HashSeed&, const HashSeed&) = default;
};

/// The (h, xi) pair driving one sketch row for one join edge.
struct RowSeeds {
    HashSeed hash;
    XiSeed xi;
    friend bool operator==(const RowSeeds&, const RowSeeds&) = default;
};

/// Evaluates the xi polynomial; lowest bit of the field value picks the sign.
constexpr int xi(const XiSeed& seed, std::uint64_t key) noexcept {
    const std::uint64_t x = detail::reduce61(key);
    const auto& c = seed.coefficients;
    std::uint64_t v = c[3];
    v = detail::addmod61(detail::mulmod61(v, x), c[2]);
    v = detail::addmod61(detail::mulmod61(v, x), c[1]);
    v = detail::addmod61(detail::mulmod61(v, x), c[0]);
    return (v & 1) ? +1 : -1;
}

/// Bucket index in [0, buckets). For power-of-two bucket counts the reduction
/// is a mask, so bucket(s, k, b/2) == bucket(s, k, b) % (b/2).
constexpr std::size_t bucket(const HashSeed& seed, std::uint64_t key,
                             std::size_t buckets) noexcept {
    const std::uint64_t x = detail::reduce61(key);
    const auto& c = seed.coefficients;
    const std::uint64_t v = detail::addmod61(detail::mulmod61(c[1], x), c[0]);
    return static_cast<std::size_t>(v % buckets);
}

/// Seeds for sketch row `row` of join edge `edge_id`. Both endpoints of an
/// edge call this with the same arguments and therefore agree bit-for-bit.
inline RowSeeds derive_seeds(std::uint64_t master_seed, std::string_view edge_id,
                             std::uint64_t row) noexcept {
    constexpr std::uint64_t kRoleXi = 0x7869;   // "xi"
    constexpr std::uint64_t kRoleHash = 0x68;   // "h"
    const std::uint64_t base = detail::splitmix64(
        detail::splitmix64(master_seed) ^
        detail::splitmix64(fnv1a64(edge_id) + 0x632be59bd9b4e019ULL) ^
        detail::splitmix64(row * 0xd1b54a32d192ed03ULL + 1));

    auto stream = [](std::uint64_t state, std::uint64_t role) {
        std::uint64_t s = detail::splitmix64(state ^ detail::splitmix64(role));
        return [s]() mutable {
            s = detail::splitmix64(s);
            return s % kMersenne61;
        };
    };

    RowSeeds out;
    auto xs = stream(base, kRoleXi);
    for (auto& c : out.xi.coefficients) c = xs();
    auto hs = stream(base, kRoleHash);
    for (auto& c : out.hash.coefficients) c = hs();
    return out;
}

/// Canonical name of the edge joining two qualified attributes ("alias.col"):
/// the two names in sorted order joined by '|'.
inline std::string canonical_edge_id(std::string_view left, std::string_view right) {
    if (right < left) std::swap(left, right);
    std::string id;
    id.reserve(left.size() + right.size() + 1);
    id.append(left).append("|").append(right);
    return id;
}

/// Maps an int64 join key into the 64-bit sketch domain.
constexpr std::uint64_t canonical_key(std::int64_t v) noexcept {
    return static_cast<std::uint64_t>(v);
}

/// Maps a text join key into the 64-bit sketch domain.
constexpr std::uint64_t canonical_key(std::string_view v) noexcept {
    return fnv1a64(v);
}

} // namespace compass
