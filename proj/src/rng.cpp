#include "ipca/rng.hpp"

namespace ipca {

namespace {
constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
}

std::uint64_t mix64(std::uint64_t x) {
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t stream_index)
    : key_(mix64(mix64(master_seed ^ 0x5851f42d4c957f2dULL) + stream_index * kGolden)) {}

RngStream::result_type RngStream::operator()() {
    ++counter_;
    return mix64(key_ + counter_ * kGolden);
}

double RngStream::uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

double RngStream::normal() { return normal_(*this); }

RngStream RngStream::child(std::uint64_t tag) const {
    return RngStream(key_, mix64(tag + 0x2545f4914f6cdd1dULL));
}

}  // namespace ipca
