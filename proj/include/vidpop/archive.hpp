#pragma once

#include "vidpop/archive/tag_index.hpp"
#include "vidpop/archive/topic.hpp"
