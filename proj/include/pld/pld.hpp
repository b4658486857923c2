// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "pld/error.hpp"
#include "pld/numerics.hpp"
#include "pld/ranking.hpp"
#include "pld/losses.hpp"
#include "pld/gradcheck.hpp"
#include "pld/mlp.hpp"
#include "pld/distill.hpp"
#include "pld/landscape.hpp"
#include "pld/bench.hpp"
#include "pld/io.hpp"
#include "pld/config.hpp"
#include "pld/checks.hpp"
#include "pld/commands.hpp"
