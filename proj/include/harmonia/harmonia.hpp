#pragma once

#include "harmonia/color_space.hpp"
#include "harmonia/descriptor.hpp"
#include "harmonia/error.hpp"
#include "harmonia/evaluation.hpp"
#include "harmonia/image.hpp"
#include "harmonia/miner.hpp"
#include "harmonia/preference.hpp"
#include "harmonia/service.hpp"
#include "harmonia/similarity.hpp"
#include "harmonia/store.hpp"
#include "harmonia/synthetic.hpp"
