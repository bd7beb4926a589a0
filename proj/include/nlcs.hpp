#pragma once

#include "nlcs/common.hpp"
#include "nlcs/parallel.hpp"
#include "nlcs/graph.hpp"
#include "nlcs/triangles.hpp"
#include "nlcs/mixing.hpp"
#include "nlcs/propagation.hpp"
#include "nlcs/correct_smooth.hpp"
#include "nlcs/rng.hpp"
#include "nlcs/spectral.hpp"
#include "nlcs/models.hpp"
#include "nlcs/dataset.hpp"
#include "nlcs/config.hpp"
#include "nlcs/experiment.hpp"
