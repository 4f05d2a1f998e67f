#pragma once

// Umbrella header: distributionally robust optimization with
// decision-dependent Wasserstein ambiguity sets.

#include "ddro/calibration.hpp"
#include "ddro/common.hpp"
#include "ddro/config.hpp"
#include "ddro/dataset.hpp"
#include "ddro/geometry.hpp"
#include "ddro/harness.hpp"
#include "ddro/interpolation.hpp"
#include "ddro/lp.hpp"
#include "ddro/measure.hpp"
#include "ddro/pricing.hpp"
#include "ddro/rng.hpp"
#include "ddro/robust.hpp"
#include "ddro/transport.hpp"
