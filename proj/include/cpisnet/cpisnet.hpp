#pragma once

#include "cpisnet/error.hpp"
#include "cpisnet/ingest.hpp"
#include "cpisnet/knockout.hpp"
#include "cpisnet/lgd.hpp"
#include "cpisnet/metrics.hpp"
#include "cpisnet/netbuild.hpp"
#include "cpisnet/nullmodels.hpp"
#include "cpisnet/parallel.hpp"
#include "cpisnet/rng.hpp"

namespace cpisnet {
inline constexpr const char* kVersion = "0.1.0";
}
