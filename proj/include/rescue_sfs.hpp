#pragma once

#include "rescue_sfs/params.hpp"
#include "rescue_sfs/random.hpp"
#include "rescue_sfs/quadrature.hpp"
#include "rescue_sfs/window.hpp"
#include "rescue_sfs/gw_trees.hpp"
#include "rescue_sfs/theory.hpp"
#include "rescue_sfs/simulator.hpp"
#include "rescue_sfs/stats.hpp"
#include "rescue_sfs/montecarlo.hpp"
#include "rescue_sfs/config.hpp"
#include "rescue_sfs/io.hpp"
#include "rescue_sfs/cli.hpp"
