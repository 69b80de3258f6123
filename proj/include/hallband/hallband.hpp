#pragma once

#include "hallband/asymptotics.hpp"
#include "hallband/cli.hpp"
#include "hallband/errors.hpp"
#include "hallband/fiber_solver.hpp"
#include "hallband/hermite.hpp"
#include "hallband/numerics.hpp"
#include "hallband/quasimode.hpp"
#include "hallband/states.hpp"
