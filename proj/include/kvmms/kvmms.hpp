#pragma once

#include "kvmms/tensor.hpp"
#include "kvmms/densities.hpp"
#include "kvmms/grid.hpp"
#include "kvmms/field.hpp"
#include "kvmms/optimizer.hpp"
#include "kvmms/mms.hpp"
#include "kvmms/slope.hpp"
#include "kvmms/diagnostics.hpp"
#include "kvmms/sampling.hpp"
#include "kvmms/decay.hpp"
#include "kvmms/propcheck.hpp"
#include "kvmms/io.hpp"
#include "kvmms/config.hpp"
#include "kvmms/scenarios.hpp"
#include "kvmms/calibration.hpp"
#include "kvmms/runner.hpp"
