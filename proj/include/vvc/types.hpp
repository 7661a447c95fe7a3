#ifndef VVC_TYPES_HPP
#define VVC_TYPES_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <complex>
#include <stdexcept>
#include <string>

namespace vvc {

using Scalar = double;
using Complex = std::complex<Scalar>;
using Vector = Eigen::VectorXd;
using IntVector = Eigen::VectorXi;
using Matrix = Eigen::MatrixXd;
using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;
using SparseMatrix = Eigen::SparseMatrix<Scalar>;
using Index = Eigen::Index;

enum class ErrorKind { config, data, convergence, internal };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void throw_config(const std::string& msg) { throw Error(ErrorKind::config, msg); }
[[noreturn]] inline void throw_data(const std::string& msg) { throw Error(ErrorKind::data, msg); }
[[noreturn]] inline void throw_convergence(const std::string& msg) { throw Error(ErrorKind::convergence, msg); }
[[noreturn]] inline void throw_internal(const std::string& msg) { throw Error(ErrorKind::internal, msg); }

inline void require_dim(Index got, Index want, const char* what) {
    if (got != want)
        throw_data(std::string(what) + ": dimension mismatch (got " + std::to_string(got) +
                   ", expected " + std::to_string(want) + ")");
}

}  // namespace vvc

#endif
