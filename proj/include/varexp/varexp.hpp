#pragma once

#include "varexp/bifurcation.hpp"
#include "varexp/commands.hpp"
#include "varexp/config.hpp"
#include "varexp/energy.hpp"
#include "varexp/fields.hpp"
#include "varexp/format.hpp"
#include "varexp/io.hpp"
#include "varexp/mesh.hpp"
#include "varexp/metric.hpp"
#include "varexp/modular.hpp"
#include "varexp/oracle.hpp"
#include "varexp/parallel.hpp"
#include "varexp/solver.hpp"
#include "varexp/verify.hpp"
