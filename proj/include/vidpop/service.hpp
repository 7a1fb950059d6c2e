#pragma once

#include "vidpop/service/ab.hpp"
#include "vidpop/service/alert.hpp"
#include "vidpop/service/score_log.hpp"
#include "vidpop/service/server.hpp"
