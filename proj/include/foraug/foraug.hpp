#pragma once

#include "foraug/asset_store.hpp"
#include "foraug/bias_metrics.hpp"
#include "foraug/compositor.hpp"
#include "foraug/config.hpp"
#include "foraug/dataset.hpp"
#include "foraug/distributions.hpp"
#include "foraug/error.hpp"
#include "foraug/image.hpp"
#include "foraug/image_io.hpp"
#include "foraug/parallel.hpp"
#include "foraug/plot.hpp"
#include "foraug/recombiner.hpp"
#include "foraug/rng.hpp"
#include "foraug/sha256.hpp"
#include "foraug/synth.hpp"
#include "foraug/variant_selector.hpp"
