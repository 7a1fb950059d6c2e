#pragma once

#include "vidpop/nnkern/activations.hpp"
#include "vidpop/nnkern/attention.hpp"
#include "vidpop/nnkern/checkpoint.hpp"
#include "vidpop/nnkern/conv.hpp"
#include "vidpop/nnkern/dense.hpp"
#include "vidpop/nnkern/gradcheck.hpp"
#include "vidpop/nnkern/lstm.hpp"
#include "vidpop/nnkern/models.hpp"
#include "vidpop/nnkern/param.hpp"
#include "vidpop/nnkern/tensor.hpp"
#include "vidpop/nnkern/train.hpp"
