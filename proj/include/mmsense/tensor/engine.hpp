#pragma once

#include "mmsense/tensor/conv.hpp"
#include "mmsense/tensor/gradcheck.hpp"
#include "mmsense/tensor/loss.hpp"
#include "mmsense/tensor/lstm.hpp"
#include "mmsense/tensor/norm.hpp"
#include "mmsense/tensor/ops.hpp"
#include "mmsense/tensor/optim.hpp"
#include "mmsense/tensor/tensor.hpp"
