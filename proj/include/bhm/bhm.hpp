#pragma once

// Umbrella header.

#include "bhm/core.hpp"
#include "bhm/envelope.hpp"
#include "bhm/gain.hpp"
#include "bhm/geometry.hpp"
#include "bhm/harmonic.hpp"
#include "bhm/laplace.hpp"
#include "bhm/majorant.hpp"
#include "bhm/oracle.hpp"
#include "bhm/pathsim.hpp"
