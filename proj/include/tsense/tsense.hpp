#pragma once

#include "tsense/constants.hpp"
#include "tsense/dielectric.hpp"
#include "tsense/dsp.hpp"
#include "tsense/errors.hpp"
#include "tsense/exp_fit.hpp"
#include "tsense/io.hpp"
#include "tsense/microstrip.hpp"
#include "tsense/pipeline.hpp"
#include "tsense/response.hpp"
#include "tsense/simulate.hpp"
#include "tsense/trace.hpp"

namespace tsense {
inline constexpr const char* version = "0.1.0";
}
