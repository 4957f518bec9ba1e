#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "vdwg/grating.hpp"

namespace vdwg
{
// Orders file: header `n,intensity[,sigma]`, one order per row.
// Scan file: header `theta_rad,counts`, strictly increasing angles.
// Rows are numbered from 1 after the header in error messages.

//! Loaded orders are renormalized to unit sum; a note is appended to
//! warnings when the input was not already normalized
OrderIntensities read_orders_csv(std::istream& in, std::vector<std::string>* warnings = nullptr);
OrderIntensities load_orders_csv(std::filesystem::path const& path,
                                 std::vector<std::string>* warnings = nullptr);

AngularScan read_scan_csv(std::istream& in);
AngularScan load_scan_csv(std::filesystem::path const& path);

//! The sigma column is written when any order carries one; absent values
//! are left empty
void write_orders_csv(std::ostream& out, OrderIntensities const& orders);
void write_scan_csv(std::ostream& out, AngularScan const& scan);

}  // namespace vdwg
