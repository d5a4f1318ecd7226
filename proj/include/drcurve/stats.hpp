#pragma once

#include <cstdint>
#include <random>

namespace drc {

double normal_cdf(double x);
double normal_pdf(double x);

// Inverse standard-normal CDF (Acklam's rational approximation refined by
// one Halley step; absolute error well below 1e-12).
double normal_quantile(double p);

// splitmix64 mix of a master seed with stream labels; used to derive
// non-overlapping RNG substreams (replication, fold, bootstrap indices).
std::uint64_t mix_seed(std::uint64_t master, std::uint64_t stream_kind, std::uint64_t index);

std::mt19937_64 make_rng(std::uint64_t master, std::uint64_t stream_kind, std::uint64_t index);

inline constexpr std::uint64_t kStreamReplication = 1;
inline constexpr std::uint64_t kStreamFolds = 2;
inline constexpr std::uint64_t kStreamBootstrap = 3;
inline constexpr std::uint64_t kStreamData = 4;

}  // namespace drc
