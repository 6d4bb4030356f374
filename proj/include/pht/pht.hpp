#pragma once

#include "pht/adapt.hpp"
#include "pht/assembly.hpp"
#include "pht/basis.hpp"
#include "pht/bezier.hpp"
#include "pht/geometry.hpp"
#include "pht/harness.hpp"
#include "pht/interp.hpp"
#include "pht/jet.hpp"
#include "pht/norms.hpp"
#include "pht/quadrature.hpp"
#include "pht/recovery.hpp"
#include "pht/tmesh.hpp"
