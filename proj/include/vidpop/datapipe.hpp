#pragma once

#include "vidpop/datapipe/embeddings.hpp"
#include "vidpop/datapipe/fvec.hpp"
#include "vidpop/datapipe/normalize.hpp"
#include "vidpop/datapipe/record.hpp"
#include "vidpop/datapipe/split.hpp"
