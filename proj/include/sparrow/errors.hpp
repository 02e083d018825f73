#ifndef SPARROW_ERRORS_HPP
#define SPARROW_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace sparrow
{

/// Base class of every error thrown by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Caller supplied arguments that violate a documented precondition.
class InvalidArgument : public Error
{
public:
    using Error::Error;
};

/// Gridless solvers and root-MUSIC need a uniform linear array.
class UnsupportedGeometry : public InvalidArgument
{
public:
    using InvalidArgument::InvalidArgument;
};

/// A numerical routine failed (non-convergence, breakdown, solver failure).
class NumericalError : public Error
{
public:
    using Error::Error;
};

class NotPositiveDefinite : public NumericalError
{
public:
    using NumericalError::NumericalError;
};

/// Vandermonde decomposition could not produce a valid atomic decomposition.
class DecompositionError : public NumericalError
{
public:
    using NumericalError::NumericalError;
};

} // namespace sparrow

#endif // SPARROW_ERRORS_HPP
