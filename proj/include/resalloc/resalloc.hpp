#pragma once

#include "resalloc/analysis.hpp"
#include "resalloc/best_response.hpp"
#include "resalloc/dynamics.hpp"
#include "resalloc/experiment.hpp"
#include "resalloc/game.hpp"
#include "resalloc/generators.hpp"
#include "resalloc/instance_io.hpp"
#include "resalloc/ranking.hpp"
#include "resalloc/utility.hpp"
#include "resalloc/verify.hpp"
