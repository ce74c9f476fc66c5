// wqed.hpp: Umbrella header

#pragma once

#include "wqed/config.hpp"
#include "wqed/coupling.hpp"
#include "wqed/errors.hpp"
#include "wqed/io.hpp"
#include "wqed/liouvillian.hpp"
#include "wqed/observables.hpp"
#include "wqed/solver.hpp"
#include "wqed/sweep.hpp"
#include "wqed/transmon.hpp"
#include "wqed/units.hpp"
