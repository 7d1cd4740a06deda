#pragma once

#include "stripefree/bounds.hpp"
#include "stripefree/commands.hpp"
#include "stripefree/config.hpp"
#include "stripefree/errors.hpp"
#include "stripefree/fft.hpp"
#include "stripefree/filter_bank.hpp"
#include "stripefree/grid.hpp"
#include "stripefree/io.hpp"
#include "stripefree/kernels.hpp"
#include "stripefree/multi.hpp"
#include "stripefree/noise.hpp"
#include "stripefree/random.hpp"
#include "stripefree/solver.hpp"
