#pragma once

#include "common.hpp"
#include "ensemble.hpp"
#include "eigenframe.hpp"
#include "experiments.hpp"
#include "kernel.hpp"
#include "models.hpp"
#include "nlevel.hpp"
#include "noise.hpp"
#include "solver.hpp"
