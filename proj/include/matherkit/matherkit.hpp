#pragma once

#include "matherkit/lagrangian.hpp"
#include "matherkit/lax_oleinik.hpp"
#include "matherkit/barrier.hpp"
#include "matherkit/conley.hpp"
#include "matherkit/relations.hpp"
#include "matherkit/experiments.hpp"
#include "matherkit/config.hpp"
#include "matherkit/scenario.hpp"
#include "matherkit/version.hpp"
