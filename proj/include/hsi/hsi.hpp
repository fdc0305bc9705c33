#pragma once

#include "hsi/error.hpp"
#include "hsi/io.hpp"
#include "hsi/cube.hpp"
#include "hsi/label_map.hpp"
#include "hsi/labeling.hpp"
#include "hsi/phantom.hpp"
#include "hsi/preprocess.hpp"
#include "hsi/svm.hpp"
#include "hsi/metrics.hpp"
#include "hsi/tsne.hpp"
#include "hsi/guidance.hpp"
#include "hsi/kdtree.hpp"
#include "hsi/spatial_filter.hpp"
#include "hsi/clustering.hpp"
#include "hsi/fusion.hpp"
#include "hsi/png.hpp"
#include "hsi/pipeline.hpp"
