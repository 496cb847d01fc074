#pragma once

#include "lanechange/behavior.hpp"
#include "lanechange/behavior_gen.hpp"
#include "lanechange/config.hpp"
#include "lanechange/dynamics.hpp"
#include "lanechange/filter.hpp"
#include "lanechange/harness.hpp"
#include "lanechange/idm.hpp"
#include "lanechange/mcts.hpp"
#include "lanechange/planners.hpp"
#include "lanechange/pomcp.hpp"
#include "lanechange/pomdp.hpp"
#include "lanechange/problem.hpp"
#include "lanechange/random.hpp"
#include "lanechange/safety.hpp"
#include "lanechange/scene.hpp"
