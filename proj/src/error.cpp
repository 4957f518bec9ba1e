#include "vdwg/error.hpp"

#include <sstream>

namespace vdwg
{
char const* to_string(ErrorKind kind)
{
    switch (kind)
    {
        case ErrorKind::invalid_input: return "invalid-input";
        case ErrorKind::evanescent_order: return "evanescent-order";
        case ErrorKind::numerical_tolerance: return "numerical-tolerance";
        case ErrorKind::fit_failure: return "fit-failure";
        case ErrorKind::missing_peak: return "missing-peak";
        case ErrorKind::boundary_solution: return "boundary-solution";
        case ErrorKind::multimodal: return "multimodal";
        case ErrorKind::parse: return "parse";
        case ErrorKind::format: return "format";
    }
    return "unknown";
}

namespace
{
std::string evanescent_message(int order, double sin_theta)
{
    std::ostringstream os;
    os << "diffraction order " << order << " is evanescent (|n lambda/d| = "
       << sin_theta << " > 1)";
    return os.str();
}

std::string tolerance_message(std::string const& what, double achieved, double target)
{
    std::ostringstream os;
    os << what << ": achieved error estimate " << achieved << " exceeds target "
       << target;
    return os.str();
}

std::string parse_message(std::size_t line, std::string const& key, std::string const& message)
{
    std::ostringstream os;
    os << "line " << line;
    if (!key.empty())
        os << " (" << key << ")";
    os << ": " << message;
    return os.str();
}

std::string row_message(std::size_t row, std::string const& message)
{
    std::ostringstream os;
    os << "row " << row << ": " << message;
    return os.str();
}
}  // namespace

EvanescentOrderError::EvanescentOrderError(int order, double sin_theta)
    : Error(ErrorKind::evanescent_order, evanescent_message(order, sin_theta))
    , order(order)
{
}

NumericalToleranceError::NumericalToleranceError(std::string const& what,
                                                 double achieved,
                                                 double target)
    : Error(ErrorKind::numerical_tolerance, tolerance_message(what, achieved, target))
    , achieved(achieved)
    , target(target)
{
}

ParseError::ParseError(std::size_t line, std::string key, std::string const& message)
    : Error(ErrorKind::parse, parse_message(line, key, message))
    , line(line)
    , key(std::move(key))
{
}

FormatError::FormatError(std::size_t row, std::string const& message)
    : Error(ErrorKind::format, row_message(row, message)), row(row)
{
}

}  // namespace vdwg
