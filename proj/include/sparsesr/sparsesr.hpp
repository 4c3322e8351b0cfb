#pragma once

#include "sparsesr/dictionary.hpp"
#include "sparsesr/dictionary_io.hpp"
#include "sparsesr/error.hpp"
#include "sparsesr/image.hpp"
#include "sparsesr/image_io.hpp"
#include "sparsesr/ksvd.hpp"
#include "sparsesr/metrics.hpp"
#include "sparsesr/parallel.hpp"
#include "sparsesr/patches.hpp"
#include "sparsesr/pipeline.hpp"
#include "sparsesr/report.hpp"
#include "sparsesr/resample.hpp"
#include "sparsesr/rng.hpp"
#include "sparsesr/sparse_coding.hpp"
#include "sparsesr/synth.hpp"
#include "sparsesr/training_set.hpp"
#include "sparsesr/workflows.hpp"
