#pragma once

#include "stochinv/core.hpp"
#include "stochinv/domain.hpp"
#include "stochinv/polynomial.hpp"
#include "stochinv/model.hpp"
#include "stochinv/spectral.hpp"
#include "stochinv/generator.hpp"
#include "stochinv/parallel.hpp"
#include "stochinv/checker.hpp"
#include "stochinv/simulator.hpp"
#include "stochinv/semimartingale.hpp"
#include "stochinv/library.hpp"
#include "stochinv/io.hpp"
#include "stochinv/app.hpp"
