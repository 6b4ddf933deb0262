#pragma once

// Umbrella header for the meshreg library.

#include "meshreg/bench.hpp"
#include "meshreg/core.hpp"
#include "meshreg/depth.hpp"
#include "meshreg/depth_io.hpp"
#include "meshreg/fpfh.hpp"
#include "meshreg/kdtree.hpp"
#include "meshreg/marching_cubes.hpp"
#include "meshreg/metrics.hpp"
#include "meshreg/normals.hpp"
#include "meshreg/pipeline.hpp"
#include "meshreg/ply_io.hpp"
#include "meshreg/registration.hpp"
#include "meshreg/rng.hpp"
#include "meshreg/scene.hpp"
#include "meshreg/sdf.hpp"
#include "meshreg/transform_io.hpp"
