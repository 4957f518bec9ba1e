#include "vdwg/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string_view>

#include "vdwg/config.hpp"
#include "vdwg/error.hpp"

namespace vdwg
{
namespace
{
std::string_view trim(std::string_view s)
{
    auto const ws = " \t\r";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos)
        return {};
    return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

std::vector<std::string_view> split(std::string_view line)
{
    std::vector<std::string_view> fields;
    std::size_t pos = 0;
    while (true)
    {
        auto comma = line.find(',', pos);
        fields.push_back(trim(line.substr(pos, comma - pos)));
        if (comma == std::string_view::npos)
            return fields;
        pos = comma + 1;
    }
}

template<class T>
T parse_field(std::string_view field, std::size_t row, char const* name)
{
    T value{};
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (field.empty() || ec != std::errc{} || ptr != field.data() + field.size())
        throw FormatError(row, std::string("invalid ") + name + " '" + std::string(field) + "'");
    if constexpr (std::is_floating_point_v<T>)
    {
        if (!std::isfinite(value))
            throw FormatError(row, std::string(name) + " must be finite");
    }
    return value;
}

//! Reads the header and returns its column count
std::size_t read_header(std::istream& in,
                        std::vector<std::vector<std::string_view>> const& accepted,
                        std::string const& expected)
{
    std::string line;
    while (std::getline(in, line))
    {
        if (trim(line).empty())
            continue;
        auto fields = split(line);
        for (auto const& cols : accepted)
        {
            if (fields == cols)
                return cols.size();
        }
        throw FormatError(0, "expected header '" + expected + "'");
    }
    throw FormatError(0, "empty file, expected header '" + expected + "'");
}

std::ifstream open(std::filesystem::path const& path)
{
    std::ifstream in(path);
    if (!in)
        throw InvalidInputError("cannot open " + path.string());
    return in;
}

}  // namespace

OrderIntensities read_orders_csv(std::istream& in, std::vector<std::string>* warnings)
{
    std::size_t const columns
        = read_header(in, {{"n", "intensity"}, {"n", "intensity", "sigma"}}, "n,intensity,sigma");

    OrderIntensities result;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line))
    {
        if (trim(line).empty())
            continue;
        ++row;
        auto fields = split(line);
        if (fields.size() != columns)
            throw FormatError(row,
                              "expected " + std::to_string(columns) + " fields, got "
                                  + std::to_string(fields.size()));
        int n = parse_field<int>(fields[0], row, "order");
        OrderValue v;
        v.intensity = parse_field<double>(fields[1], row, "intensity");
        if (v.intensity < 0)
            throw FormatError(row, "intensity must be non-negative");
        if (columns == 3 && !fields[2].empty())
        {
            double s = parse_field<double>(fields[2], row, "sigma");
            if (!(s >= 0))
                throw FormatError(row, "sigma must be non-negative");
            v.sigma = s;
        }
        if (!result.orders.emplace(n, v).second)
            throw FormatError(row, "duplicate order " + std::to_string(n));
    }
    if (result.orders.empty())
        throw FormatError(0, "no data rows");

    double total = result.total();
    if (!(total > 0))
        throw FormatError(0, "intensities sum to zero");
    if (std::abs(total - 1) > 1e-12)
    {
        for (auto& [n, v] : result.orders)
        {
            v.intensity /= total;
            if (v.sigma)
                *v.sigma /= total;
        }
        if (warnings)
            warnings->push_back("order intensities summed to " + format_double(total)
                                + "; renormalized to 1");
    }
    return result;
}

OrderIntensities load_orders_csv(std::filesystem::path const& path,
                                 std::vector<std::string>* warnings)
{
    auto in = open(path);
    return read_orders_csv(in, warnings);
}

AngularScan read_scan_csv(std::istream& in)
{
    read_header(in, {{"theta_rad", "counts"}}, "theta_rad,counts");
    AngularScan scan;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line))
    {
        if (trim(line).empty())
            continue;
        ++row;
        auto fields = split(line);
        if (fields.size() != 2)
            throw FormatError(row, "expected 2 fields, got " + std::to_string(fields.size()));
        double theta = parse_field<double>(fields[0], row, "theta_rad");
        double counts = parse_field<double>(fields[1], row, "counts");
        if (counts < 0)
            throw FormatError(row, "counts must be non-negative");
        if (!scan.theta_rad.empty() && !(theta > scan.theta_rad.back()))
            throw FormatError(row, "angles must increase strictly");
        scan.theta_rad.push_back(theta);
        scan.value.push_back(counts);
    }
    if (scan.theta_rad.empty())
        throw FormatError(0, "no data rows");
    return scan;
}

AngularScan load_scan_csv(std::filesystem::path const& path)
{
    auto in = open(path);
    return read_scan_csv(in);
}

void write_orders_csv(std::ostream& out, OrderIntensities const& orders)
{
    bool any_sigma = false;
    for (auto const& [n, v] : orders.orders)
        any_sigma = any_sigma || v.sigma.has_value();
    out << (any_sigma ? "n,intensity,sigma\n" : "n,intensity\n");
    for (auto const& [n, v] : orders.orders)
    {
        out << n << ',' << format_double(v.intensity);
        if (any_sigma)
            out << ',' << (v.sigma ? format_double(*v.sigma) : std::string());
        out << '\n';
    }
}

void write_scan_csv(std::ostream& out, AngularScan const& scan)
{
    scan.validate();
    out << "theta_rad,counts\n";
    for (std::size_t i = 0; i < scan.size(); ++i)
        out << format_double(scan.theta_rad[i]) << ',' << format_double(scan.value[i]) << '\n';
}

}  // namespace vdwg
