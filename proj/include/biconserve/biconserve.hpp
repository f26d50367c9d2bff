#ifndef BICONSERVE_BICONSERVE_HPP
#define BICONSERVE_BICONSERVE_HPP

// Numerical workbench for the intrinsic geometry of non-CMC biconservative
// surfaces in 3-dimensional space forms: curvature ODE profiles, the explicit
// (u,s) metric family, conformal transformation laws and Ricci-condition
// checks, the flattening exponent solver, and the extrinsic shape-operator
// verification suite.

#include "biconserve/conformal.hpp"
#include "biconserve/embedding.hpp"
#include "biconserve/errors.hpp"
#include "biconserve/field.hpp"
#include "biconserve/flattener.hpp"
#include "biconserve/io.hpp"
#include "biconserve/jet.hpp"
#include "biconserve/metric.hpp"
#include "biconserve/ode45.hpp"
#include "biconserve/pipeline.hpp"
#include "biconserve/profile.hpp"
#include "biconserve/report.hpp"
#include "biconserve/spline.hpp"
#include "biconserve/stencils.hpp"

#endif
