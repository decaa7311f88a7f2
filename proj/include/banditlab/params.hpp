#pragma once
// Environment parameters of the two-armed bandit: the success probabilities
// of arms A and B and their edge pi = pa - pb. The learning recursion never
// sees pa/pb; the simulator and the regime classifier do.

#include <stdexcept>

namespace banditlab {

struct BanditParams {
    double pa = 0.0;
    double pb = 0.0;
    double pi = 0.0;  // pa - pb

    BanditParams() = default;

    BanditParams(double pa_, double pb_) : pa(pa_), pb(pb_), pi(pa_ - pb_) {
        if (!(0.0 < pb_ && pb_ < pa_ && pa_ < 1.0)) {
            throw std::invalid_argument("BanditParams: requires 0 < pb < pa < 1");
        }
    }
};

}  // namespace banditlab
