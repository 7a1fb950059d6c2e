#pragma once

#include "vidpop/headline/model.hpp"
#include "vidpop/headline/synthetic.hpp"
#include "vidpop/headline/tokenize.hpp"
