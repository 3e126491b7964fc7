#pragma once

#include "dcdyn/dcload.hpp"
#include "dcdyn/engine.hpp"
#include "dcdyn/errors.hpp"
#include "dcdyn/grid.hpp"
#include "dcdyn/scenario_io.hpp"
#include "dcdyn/stochastic.hpp"
#include "dcdyn/ups.hpp"
