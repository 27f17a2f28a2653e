#pragma once

#include "soqdyn/classical.hpp"
#include "soqdyn/grid.hpp"
#include "soqdyn/model.hpp"
#include "soqdyn/observables.hpp"
#include "soqdyn/qprop.hpp"
#include "soqdyn/quenchlab.hpp"
#include "soqdyn/rng.hpp"
#include "soqdyn/twa.hpp"
