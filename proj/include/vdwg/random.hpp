#pragma once

#include <cstdint>
#include <random>

namespace vdwg
{
/*!
 * Seedable, splittable 64-bit generator with a frozen algorithm.
 *
 * The engine is std::mt19937_64 (fully specified by the standard) seeded by
 * a SplitMix64 hash of the user seed. Uniform doubles take the top 53 bits;
 * normal deviates use the Box-Muller transform. No std distribution is
 * involved, so streams are identical across standard libraries.
 */
class Rng
{
  public:
    static constexpr char const* algorithm = "mt19937_64+splitmix64-seed+box-muller/v1";

    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64() { return engine_(); }
    //! Uniform on [0, 1)
    double uniform();
    //! Standard normal deviate
    double normal();

    //! Independent child stream derived from this generator's seed
    Rng split(std::uint64_t stream) const;

    std::uint64_t seed() const { return seed_; }

  private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    double spare_{};
    bool has_spare_{false};
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace vdwg
