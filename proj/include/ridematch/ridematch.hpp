#pragma once

#include "ridematch/assign.hpp"
#include "ridematch/combos.hpp"
#include "ridematch/csv.hpp"
#include "ridematch/demand.hpp"
#include "ridematch/dyntree.hpp"
#include "ridematch/errors.hpp"
#include "ridematch/network.hpp"
#include "ridematch/pruning.hpp"
#include "ridematch/rng.hpp"
#include "ridematch/sim.hpp"
