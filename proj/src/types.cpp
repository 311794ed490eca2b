#include "carving/types.hpp"

#include <algorithm>
#include <cmath>

#include "carving/rng.hpp"

namespace carving {

void Dataset::validate() const {
    if (X.rows() < 2) throw ValidationError("dataset: need at least 2 observations");
    if (X.cols() < 1) throw ValidationError("dataset: need at least 1 column");
    if (y.size() != X.rows()) throw ValidationError("dataset: X rows and y length differ");
    if (!X.allFinite() || !y.allFinite()) throw ValidationError("dataset: non-finite entries");
    if (family == Family::binomial) {
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            if (y[i] != 0.0 && y[i] != 1.0) {
                throw ValidationError("dataset: binomial response must be exactly 0 or 1");
            }
        }
    }
}

SplitPlan make_split(Eigen::Index n, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction <= 1.0)) {
        throw ValidationError("split: fraction must be in (0, 1]");
    }
    auto n1 = static_cast<Eigen::Index>(std::llround(fraction * static_cast<double>(n)));
    n1 = std::clamp<Eigen::Index>(n1, 1, n);

    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    RngStream rng(seed);
    for (Eigen::Index i = n - 1; i > 0; --i) {
        const auto j = static_cast<Eigen::Index>(rng.next_below(static_cast<std::uint64_t>(i) + 1));
        std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }

    SplitPlan plan;
    plan.fraction = fraction;
    plan.seed = seed;
    plan.selection_idx.assign(perm.begin(), perm.begin() + n1);
    plan.inference_idx.assign(perm.begin() + n1, perm.end());
    std::sort(plan.selection_idx.begin(), plan.selection_idx.end());
    std::sort(plan.inference_idx.begin(), plan.inference_idx.end());
    return plan;
}

Matrix take_rows(const Matrix& m, const IndexList& idx) {
    Matrix out(static_cast<Eigen::Index>(idx.size()), m.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(idx[i]);
    return out;
}

Vector take_elems(const Vector& v, const IndexList& idx) {
    Vector out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[idx[i]];
    return out;
}

}  // namespace carving
