#pragma once

#include "hdgbddc/error.hpp"
#include "hdgbddc/mesh.hpp"
#include "hdgbddc/quadrature.hpp"
#include "hdgbddc/basis.hpp"
#include "hdgbddc/projection.hpp"
#include "hdgbddc/problem.hpp"
#include "hdgbddc/stabilizer.hpp"
#include "hdgbddc/hdg_local.hpp"
#include "hdgbddc/assembly.hpp"
#include "hdgbddc/gmres.hpp"
#include "hdgbddc/bddc.hpp"
#include "hdgbddc/norms.hpp"
#include "hdgbddc/experiment.hpp"
