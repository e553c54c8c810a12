#pragma once

#include "hlip/error.hpp"
#include "hlip/gait.hpp"
#include "hlip/hlip_core.hpp"
#include "hlip/orbit.hpp"
#include "hlip/polytope.hpp"
#include "hlip/stepping.hpp"
#include "hlip/vel_approx.hpp"
#include "hlip/sim/analysis.hpp"
#include "hlip/sim/biped.hpp"
#include "hlip/sim/controller.hpp"
#include "hlip/sim/scenario.hpp"
