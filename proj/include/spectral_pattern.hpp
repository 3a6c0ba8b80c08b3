#pragma once

#include "spectral_pattern/checkpoint.hpp"
#include "spectral_pattern/data.hpp"
#include "spectral_pattern/errors.hpp"
#include "spectral_pattern/experiment.hpp"
#include "spectral_pattern/geometry.hpp"
#include "spectral_pattern/graph.hpp"
#include "spectral_pattern/graph_io.hpp"
#include "spectral_pattern/matrix.hpp"
#include "spectral_pattern/nn.hpp"
#include "spectral_pattern/spectral.hpp"
#include "spectral_pattern/training.hpp"
