#pragma once

#include "diracsim/blockmatrix.hpp"
#include "diracsim/dense.hpp"
#include "diracsim/evolution.hpp"
#include "diracsim/fourier.hpp"
#include "diracsim/freebasis.hpp"
#include "diracsim/io.hpp"
#include "diracsim/pipeline.hpp"
#include "diracsim/potential.hpp"
#include "diracsim/selftest.hpp"
#include "diracsim/simop.hpp"
#include "diracsim/spectrum.hpp"
#include "diracsim/transforms.hpp"
