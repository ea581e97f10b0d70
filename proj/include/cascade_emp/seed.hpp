#ifndef CASCADE_EMP_SEED_HPP
#define CASCADE_EMP_SEED_HPP

#include <cstdint>

namespace cascade_emp
{

inline std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed for task @p index of a run seeded with @p master.  Depends only on
/// the pair, never on which thread executes the task.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept
{
    return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

} // namespace cascade_emp

#endif
