#pragma once

#include <cstdint>
#include <cstring>
#include <string_view>

namespace sentinel {

/// FNV-1a 64-bit. Used for config hashes, input digests, and deterministic
/// per-scenario jitter; stable across platforms and runs.
struct Fnv1a {
    std::uint64_t state = 1469598103934665603ull;

    void update(const void* data, std::size_t size) {
        const auto* bytes = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < size; ++i) {
            state ^= bytes[i];
            state *= 1099511628211ull;
        }
    }
    void update(std::string_view text) { update(text.data(), text.size()); }
    void update(std::uint64_t v) { update(&v, sizeof(v)); }
    void update(std::int64_t v) { update(&v, sizeof(v)); }
    void update(double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof(bits));
        update(bits);
    }

    std::uint64_t value() const { return state; }
};

inline std::uint64_t fnv1a(std::string_view text) {
    Fnv1a h;
    h.update(text);
    return h.value();
}

/// splitmix64 mixer for deriving independent RNG streams from one seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

}  // namespace sentinel
