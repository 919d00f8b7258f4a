#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>

namespace sgym {

inline constexpr std::string_view kVersion = "0.1.0";

// 64-bit FNV-1a; used for config fingerprints and seed derivation.
std::uint64_t fnv1a(std::string_view bytes,
                    std::uint64_t basis = 0xcbf29ce484222325ull);

std::uint64_t splitmix64(std::uint64_t x);

// Stable sub-seed for a named random stream, so a single --seed drives
// every component without the streams colliding.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream,
                          std::uint64_t index = 0);

using Rng = std::mt19937_64;

// Canonical [0,1) double from the top 53 bits. Not std::uniform_real_distribution:
// its output is library-defined and we promise seed-stable artifacts.
double uniform01(Rng& rng);
double uniform(Rng& rng, double lo, double hi);

// Locale-free shortest round-trip formatting via std::to_chars.
std::string format_double(double v);
std::optional<double> try_parse_double(std::string_view s);
double parse_double(std::string_view s);  // throws std::invalid_argument

}  // namespace sgym
