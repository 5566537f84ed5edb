#pragma once

#include "errors.hpp"
#include "sampling.hpp"
#include "quadrature.hpp"
#include "geometry.hpp"
#include "coefficients.hpp"
#include "auxiliary.hpp"
#include "mesh.hpp"
#include "solver.hpp"
#include "oracle.hpp"
#include "verify.hpp"
#include "config.hpp"
#include "report_io.hpp"
