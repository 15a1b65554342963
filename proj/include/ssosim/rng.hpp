#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace ssosim {

// Deterministic source for every opaque value in a simulated world (session
// ids, authorization codes, tokens, state nonces). Same seed, same run.
class TokenGenerator {
public:
    explicit TokenGenerator(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // prefix + 32 hex chars: 128 bits of generator output per token.
    std::string next_token(std::string_view prefix = {}) {
        static constexpr char digits[] = "0123456789abcdef";
        std::string out(prefix);
        for (int word = 0; word < 2; ++word) {
            std::uint64_t v = engine_();
            for (int shift = 60; shift >= 0; shift -= 4) {
                out.push_back(digits[(v >> shift) & 0xf]);
            }
        }
        return out;
    }

    // Independent child stream, so components can consume tokens in any
    // order without perturbing each other.
    TokenGenerator fork() { return TokenGenerator(engine_() ^ 0x9e3779b97f4a7c15ULL); }

private:
    std::mt19937_64 engine_;
};

} // namespace ssosim
