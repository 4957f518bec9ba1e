#pragma once

// Boost 1.74's pchip calls unqualified isnan; <math.h> puts it in the
// global namespace.
#include <math.h>

#include <boost/math/interpolators/pchip.hpp>
