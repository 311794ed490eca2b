#include "carving/rng.hpp"

#include "carving/stats.hpp"

namespace carving {

double RngStream::next_normal() {
    return norm_quantile(next_uniform());
}

}  // namespace carving
