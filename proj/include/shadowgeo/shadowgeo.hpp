#pragma once

#include "shadowgeo/evaluation.hpp"
#include "shadowgeo/full_mask.hpp"
#include "shadowgeo/geometry.hpp"
#include "shadowgeo/gradcheck.hpp"
#include "shadowgeo/io.hpp"
#include "shadowgeo/light.hpp"
#include "shadowgeo/objectives.hpp"
#include "shadowgeo/oracle.hpp"
#include "shadowgeo/pipeline.hpp"
#include "shadowgeo/raster.hpp"
