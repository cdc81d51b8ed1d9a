#pragma once

#include "tripscreen/core.hpp"
#include "tripscreen/errors.hpp"
#include "tripscreen/io.hpp"
#include "tripscreen/path.hpp"
#include "tripscreen/problem.hpp"
#include "tripscreen/screening.hpp"
#include "tripscreen/solver.hpp"

namespace tripscreen {
inline constexpr const char* kVersion = "0.1.0";
}
