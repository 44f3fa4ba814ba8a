#pragma once

#include "distreg/distdata.hpp"
#include "distreg/embedded.hpp"
#include "distreg/errors.hpp"
#include "distreg/frechet.hpp"
#include "distreg/geodesic.hpp"
#include "distreg/io.hpp"
#include "distreg/parallel.hpp"
#include "distreg/rconcave.hpp"
#include "distreg/simgen.hpp"
#include "distreg/sparsity.hpp"
#include "distreg/stability.hpp"
#include "distreg/svg.hpp"
#include "distreg/version.hpp"
