#pragma once

// Library umbrella. The JSON/CLI layer (io.hpp, cli.hpp) needs the vendored
// single-header libraries and is included separately.

#include "platoon/errors.hpp"
#include "platoon/model.hpp"
#include "platoon/norms.hpp"
#include "platoon/optimize.hpp"
#include "platoon/pade.hpp"
#include "platoon/param.hpp"
#include "platoon/sim.hpp"
#include "platoon/synthesis.hpp"
