#pragma once

#include "vidpop/visual/frames.hpp"
#include "vidpop/visual/image.hpp"
#include "vidpop/visual/opening.hpp"
#include "vidpop/visual/persist.hpp"
#include "vidpop/visual/thumbnail.hpp"
#include "vidpop/visual/tinycnn.hpp"
