#pragma once

// Umbrella header for the catsim library.

#include "catsim/bn.hpp"
#include "catsim/bn_em.hpp"
#include "catsim/bn_infer.hpp"
#include "catsim/config.hpp"
#include "catsim/core.hpp"
#include "catsim/dataio.hpp"
#include "catsim/errors.hpp"
#include "catsim/harness.hpp"
#include "catsim/irt.hpp"
#include "catsim/nn.hpp"
#include "catsim/rng.hpp"
