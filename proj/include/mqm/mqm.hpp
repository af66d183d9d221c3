#pragma once

#include "mqm/analytic.hpp"
#include "mqm/arrival.hpp"
#include "mqm/core.hpp"
#include "mqm/diffusion.hpp"
#include "mqm/reconstruct.hpp"
#include "mqm/screen.hpp"
#include "mqm/solver.hpp"
