#pragma once

#include <stdexcept>
#include <string>

namespace vdwg
{
//! Broad failure classes; the CLI maps these onto exit codes.
enum class ErrorKind
{
    invalid_input,
    evanescent_order,
    numerical_tolerance,
    fit_failure,
    missing_peak,
    boundary_solution,
    multimodal,
    parse,
    format,
};

char const* to_string(ErrorKind kind);

class Error : public std::runtime_error
{
  public:
    Error(ErrorKind kind, std::string const& what)
        : std::runtime_error(what), kind_(kind)
    {
    }

    ErrorKind kind() const noexcept { return kind_; }

  private:
    ErrorKind kind_;
};

struct InvalidInputError : Error
{
    explicit InvalidInputError(std::string const& what)
        : Error(ErrorKind::invalid_input, what)
    {
    }
};

struct EvanescentOrderError : Error
{
    EvanescentOrderError(int order, double sin_theta);
    int order;
};

//! Quadrature did not reach its target; carries the achieved estimate.
struct NumericalToleranceError : Error
{
    NumericalToleranceError(std::string const& what,
                            double achieved,
                            double target);
    double achieved;
    double target;
};

struct FitFailureError : Error
{
    FitFailureError(std::string const& what) : Error(ErrorKind::fit_failure, what) {}
};

struct MissingPeakError : Error
{
    MissingPeakError(std::string const& what, std::size_t index)
        : Error(ErrorKind::missing_peak, what), peak_index(index)
    {
    }
    std::size_t peak_index;
};

struct BoundarySolutionError : Error
{
    BoundarySolutionError(std::string const& what, double bound)
        : Error(ErrorKind::boundary_solution, what), bound(bound)
    {
    }
    double bound;
};

struct MultimodalError : Error
{
    explicit MultimodalError(std::string const& what)
        : Error(ErrorKind::multimodal, what)
    {
    }
};

//! Config/table syntax or validation error at a given line.
struct ParseError : Error
{
    ParseError(std::size_t line, std::string key, std::string const& message);
    std::size_t line;
    std::string key;
};

//! CSV content error at a given data row (1-based, header excluded).
struct FormatError : Error
{
    FormatError(std::size_t row, std::string const& message);
    std::size_t row;
};

}  // namespace vdwg
