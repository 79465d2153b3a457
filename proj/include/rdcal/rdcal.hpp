#pragma once

// Umbrella header.

#include "rdcal/adjoint.hpp"
#include "rdcal/config.hpp"
#include "rdcal/error.hpp"
#include "rdcal/field.hpp"
#include "rdcal/field_io.hpp"
#include "rdcal/forward.hpp"
#include "rdcal/grid.hpp"
#include "rdcal/hessian.hpp"
#include "rdcal/krylov.hpp"
#include "rdcal/observation.hpp"
#include "rdcal/operators.hpp"
#include "rdcal/optimizer.hpp"
#include "rdcal/random.hpp"
#include "rdcal/regularization.hpp"
#include "rdcal/run.hpp"
#include "rdcal/verify.hpp"
