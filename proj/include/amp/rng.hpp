#pragma once

#include <cstdint>
#include <limits>
#include <random>

#include "amp/types.hpp"

namespace amp {

// Counter-based generator: draw i of stream s under seed k is a pure function of (k, s, i),
// so replicates can be evaluated in any order.
class RngStream {
public:
    using result_type = std::uint64_t;

    RngStream(std::uint64_t seed = 0, std::uint64_t stream_id = 0);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
    result_type operator()();

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_; }
    std::uint64_t counter() const { return counter_; }

    // Child stream for a named sub-purpose, independent of this stream's counter.
    RngStream split(std::uint64_t tag) const;

    double uniform();  // in (0,1)
    double normal();
    Vec normal_vec(Eigen::Index n, double sd = 1.0);
    int rademacher();

private:
    std::uint64_t seed_, stream_, key_, counter_ = 0;
    std::normal_distribution<double> gauss_;
};

std::uint64_t mix64(std::uint64_t x);

}  // namespace amp
