#pragma once

#include <iosfwd>

namespace vdwg
{
char const* version();

/*!
 * Entry point of the command-line tool.
 *
 * Exit codes: 0 success, 1 usage error, 2 input or format error,
 * 3 numerical failure. Failures print one line to err of the form
 * `error kind=<kind> exit=<code> message="<text>"`.
 */
int run_cli(int argc, char const* const* argv, std::ostream& out, std::ostream& err);

}  // namespace vdwg
