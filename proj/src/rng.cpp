#include "amp/rng.hpp"

#include <cmath>

namespace amp {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_(stream_id), key_(mix64(mix64(seed) ^ (stream_id * 0xd1b54a32d192ed03ULL + 1))) {}

RngStream::result_type RngStream::operator()() {
    // Two rounds over (key, counter) give good avalanche for sequential counters.
    std::uint64_t c = counter_++;
    return mix64(mix64(key_ ^ c) + c);
}

RngStream RngStream::split(std::uint64_t tag) const {
    return RngStream(mix64(seed_ ^ mix64(tag + 0x5851f42d4c957f2dULL)), stream_);
}

double RngStream::uniform() {
    // 53 random bits, shifted off zero.
    return (double((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::normal() { return gauss_(*this); }

Vec RngStream::normal_vec(Eigen::Index n, double sd) {
    Vec x(n);
    for (Eigen::Index i = 0; i < n; ++i) x[i] = sd * gauss_(*this);
    return x;
}

int RngStream::rademacher() { return ((*this)() >> 63) ? 1 : -1; }

}  // namespace amp
