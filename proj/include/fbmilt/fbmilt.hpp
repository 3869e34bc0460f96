#pragma once

#include "fbmilt/covkernel.hpp"
#include "fbmilt/cubature.hpp"
#include "fbmilt/errors.hpp"
#include "fbmilt/fbmgen.hpp"
#include "fbmilt/iltmc.hpp"
#include "fbmilt/lemmas.hpp"
#include "fbmilt/phasescan.hpp"
#include "fbmilt/quadmoments.hpp"
#include "fbmilt/rng.hpp"
#include "fbmilt/stats.hpp"
#include "fbmilt/version.hpp"
