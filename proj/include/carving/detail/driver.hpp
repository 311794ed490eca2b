#pragma once

#include <cstdint>
#include <optional>

#include "carving/carve.hpp"
#include "carving/multi.hpp"
#include "carving/rng.hpp"

// Split-level plumbing shared by the Gaussian and logistic drivers.
namespace carving::detail {

inline constexpr std::uint64_t kTagSplit = 0x73706c74;  // "splt"
inline constexpr std::uint64_t kTagCv = 0x63766376;     // "cvcv"
inline constexpr std::uint64_t kTagChain = 0x6368696e;  // "chin"
inline constexpr std::uint64_t kTagSigma = 0x7369676d;  // "sigm"

struct SplitWork {
    SplitTrace trace;
    std::optional<SelectionEvent> event;
    std::optional<CarveProblem> problem;
    bool empty_selection = false;
};

std::uint64_t split_seed(std::uint64_t master, long b);
std::uint64_t cv_seed(std::uint64_t master, long b);
std::uint64_t chain_seed(std::uint64_t master, long b, Eigen::Index global_j);

double abort_threshold(const MulticarveConfig& cfg, Eigen::Index s);
ChainConfig chain_config(const MulticarveConfig& cfg, Eigen::Index s, std::uint64_t seed);
long test_count_threshold(const MulticarveConfig& cfg);

SplitWork select_split_gaussian(const Dataset& data, const MulticarveConfig& cfg, long b,
                                double sigma_global);

void run_pvalue_phase(const MulticarveConfig& cfg, std::vector<SplitWork>& splits,
                      InferenceReport& rep);
void aggregate_report(const MulticarveConfig& cfg, InferenceReport& rep);

}  // namespace carving::detail
