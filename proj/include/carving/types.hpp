#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace carving {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using IndexList = std::vector<Eigen::Index>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Family { gaussian, binomial };

inline const char* family_name(Family f) {
    return f == Family::gaussian ? "gaussian" : "binomial";
}

// ---------------------------------------------------------------------------
// Errors. ValidationError means bad input (CLI exit code 2); NumericError and
// its children mean a numerical failure in an otherwise valid problem (exit
// code 3).
// ---------------------------------------------------------------------------

struct ValidationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConvergenceError : NumericError {
    ConvergenceError(const std::string& what, double residual)
        : NumericError(what), residual(residual) {}
    double residual;
};

struct SingularSubmatrix : NumericError {
    using NumericError::NumericError;
};

struct DegenerateConditioning : NumericError {
    using NumericError::NumericError;
};

struct InvalidStartPoint : NumericError {
    using NumericError::NumericError;
};

struct StuckChain : NumericError {
    using NumericError::NumericError;
};

struct DegenerateTruncation : NumericError {
    using NumericError::NumericError;
};

// Raised when a Lasso fit selected nothing; callers turn this into all-one
// p-values for the affected split rather than failing the run.
struct EmptySelection : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Core data
// ---------------------------------------------------------------------------

struct Dataset {
    Matrix X;
    Vector y;
    Family family = Family::gaussian;

    Eigen::Index n() const { return X.rows(); }
    Eigen::Index p() const { return X.cols(); }

    // n >= 2, p >= 1, all finite, binomial responses exactly 0/1.
    void validate() const;
};

struct SplitPlan {
    IndexList selection_idx;
    IndexList inference_idx;
    double fraction = 0.5;
    std::uint64_t seed = 0;

    Eigen::Index n1() const { return static_cast<Eigen::Index>(selection_idx.size()); }
    Eigen::Index n2() const { return static_cast<Eigen::Index>(inference_idx.size()); }
};

// Random split with n1 = round(f * n); f = 1 leaves inference_idx empty.
SplitPlan make_split(Eigen::Index n, double fraction, std::uint64_t seed);

// Rows of `m` (or entries of `v`) at the given indices, in order.
Matrix take_rows(const Matrix& m, const IndexList& idx);
Vector take_elems(const Vector& v, const IndexList& idx);

}  // namespace carving
