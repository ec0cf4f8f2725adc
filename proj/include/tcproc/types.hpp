#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace tcproc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class NonFiniteError : public Error {
public:
    using Error::Error;
};
class DomainError : public Error {
public:
    using Error::Error;
};
class UnsupportedVariantError : public Error {
public:
    using Error::Error;
};
class GridMismatchError : public Error {
public:
    using Error::Error;
};
class SingularSigmaError : public Error {
public:
    using Error::Error;
};
class OffDomainError : public Error {
public:
    using Error::Error;
};
class OffDomainControlError : public Error {
public:
    using Error::Error;
};
class EmptyControlSetError : public Error {
public:
    using Error::Error;
};
class UnstableStepError : public Error {
public:
    using Error::Error;
};
class CflViolationError : public Error {
public:
    using Error::Error;
};
class NonmonotoneWeightsError : public Error {
public:
    using Error::Error;
};
class IncompatiblePrefixError : public Error {
public:
    using Error::Error;
};
class AxiomViolationError : public Error {
public:
    using Error::Error;
};
class GrowthViolationError : public Error {
public:
    using Error::Error;
};
class EllipticityError : public Error {
public:
    using Error::Error;
};
class ConfigError : public Error {
public:
    ConfigError(const std::string& field, const std::string& msg)
        : Error("config error at `" + field + "`: " + msg), field_path(field) {}
    std::string field_path;
};

}  // namespace tcproc
