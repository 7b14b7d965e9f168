#pragma once

#include "error.hpp"
#include "tensor.hpp"
#include "random.hpp"
#include "transform.hpp"
#include "parallel.hpp"
#include "algebra.hpp"
#include "semidefinite.hpp"
#include "sdp.hpp"
#include "equivariance.hpp"
#include "sos.hpp"
#include "completion.hpp"
#include "io.hpp"
