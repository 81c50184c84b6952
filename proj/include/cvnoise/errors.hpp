#ifndef CVNOISE_ERRORS_HPP
#define CVNOISE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace cvnoise
{

struct Error : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

// Precondition or parameter-range violation.
struct DomainError : Error
{
    using Error::Error;
};

// A LinearField is missing a noise model, or a source id is injected twice.
struct SourceError : Error
{
    using Error::Error;
};

// Invalid network graph: cycles, dangling ports, fan-out.
struct TopologyError : Error
{
    using Error::Error;
};

struct ConvergenceError : Error
{
    ConvergenceError(const std::string& what, double best_residual)
        : Error(what), best_residual(best_residual)
    {
    }

    double best_residual;
};

} // namespace cvnoise

#endif
