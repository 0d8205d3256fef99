#pragma once

#include <cstdint>
#include <string_view>

namespace rjmlt {

// PCG32 (O'Neill). Small state, decent quality, and cheap to fork into
// independent streams, which is what keeps multi-threaded renders
// reproducible: every chain owns a stream derived from (seed, label, index)
// and never touches a shared generator.
class Pcg32 {
public:
    Pcg32() { seed(0x853c49e6748fea9bULL, 0xda3e39cb94b95bdbULL); }
    Pcg32(uint64_t initState, uint64_t initSeq = 1) { seed(initState, initSeq); }

    void seed(uint64_t initState, uint64_t initSeq)
    {
        _state = 0u;
        _inc = (initSeq << 1u) | 1u;
        nextU32();
        _state += initState;
        nextU32();
    }

    uint32_t nextU32()
    {
        uint64_t oldState = _state;
        _state = oldState*6364136223846793005ULL + _inc;
        uint32_t xorShifted = uint32_t(((oldState >> 18u) ^ oldState) >> 27u);
        uint32_t rot = uint32_t(oldState >> 59u);
        return (xorShifted >> rot) | (xorShifted << ((~rot + 1u) & 31));
    }

    // Uniform double in [0, 1) with 2^-32 granularity. Enough resolution for
    // mutation offsets; inversion accuracy is limited by the maps, not by this.
    double nextDouble()
    {
        return nextU32()*(1.0/4294967296.0);
    }

private:
    uint64_t _state = 0;
    uint64_t _inc = 0;
};

inline uint64_t splitMix64(uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30))*0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27))*0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t hashLabel(std::string_view label)
{
    uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : label) {
        h ^= uint64_t(uint8_t(c));
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Named substream: one global seed fans out into as many independent streams
// as the program asks for, addressed by a label and an index. The sequence
// selector comes from the label so streams with equal indices stay distinct.
inline Pcg32 substream(uint64_t seed, std::string_view label, uint64_t index = 0)
{
    uint64_t lh = hashLabel(label);
    uint64_t state = splitMix64(seed ^ splitMix64(lh + index));
    uint64_t seq = splitMix64(lh ^ (index*0x9e3779b97f4a7c15ULL));
    return Pcg32(state, seq);
}

} // namespace rjmlt
