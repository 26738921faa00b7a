#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace amp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class ErrorKind { Precondition, Solver, Config, NonFinite, Degenerate };

class AmpError : public std::runtime_error {
public:
    AmpError(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw AmpError(kind, what); }

inline void require(bool ok, const std::string& what) {
    if (!ok) fail(ErrorKind::Precondition, what);
}

// Normalised norm ||x||_n = ||x|| / sqrt(n) and inner product <x,y>_n.
inline double norm_n(const Vec& x) { return x.size() ? x.norm() / std::sqrt(double(x.size())) : 0.0; }
inline double dot_n(const Vec& x, const Vec& y) { return x.size() ? x.dot(y) / double(x.size()) : 0.0; }

}  // namespace amp
