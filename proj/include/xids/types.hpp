#ifndef XIDS_TYPES_HPP
#define XIDS_TYPES_HPP

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace xids {

// Feature matrices are row-major: models and occlusion walk rows.
template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Matrix = RowMatrix<double>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Labels = Eigen::VectorXi;
using IndexList = std::vector<Eigen::Index>;

// Errors carry the CLI exit code they map to.
class Error : public std::runtime_error {
public:
    Error(const std::string& what, int exit_code) : std::runtime_error(what), code_(exit_code) {}
    int exit_code() const noexcept { return code_; }

private:
    int code_;
};

/// Bad input: unreadable files, malformed CSV, schema problems, invalid arguments.
class InputError : public Error {
public:
    explicit InputError(const std::string& what) : Error(what, 2) {}
};

/// A trained model fell below the accuracy guard.
class TrainingGuardError : public Error {
public:
    explicit TrainingGuardError(const std::string& what) : Error(what, 3) {}
};

/// Model and data disagree on the feature layout.
class LayoutError : public Error {
public:
    explicit LayoutError(const std::string& what) : Error(what, 4) {}
};

}  // namespace xids

#endif  // XIDS_TYPES_HPP
