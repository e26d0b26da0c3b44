#pragma once

#include <stdexcept>
#include <string>

namespace chanflow {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class DegenerateShapeError : public Error {
public:
    using Error::Error;
};

class ContractViolation : public Error {
public:
    using Error::Error;
};

class IllConditionedError : public Error {
public:
    using Error::Error;
};

class SolverFailure : public Error {
public:
    SolverFailure(const std::string& what, int step = -1)
        : Error(what), step_(step) {}

    int step() const { return step_; }

private:
    int step_;
};

inline void ensure(bool cond, const std::string& msg)
{
    if (!cond) {
        throw ContractViolation(msg);
    }
}

} // namespace chanflow
