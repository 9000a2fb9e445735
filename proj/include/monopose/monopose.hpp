#pragma once

#include "monopose/camera.hpp"
#include "monopose/errors.hpp"
#include "monopose/euler.hpp"
#include "monopose/pipeline.hpp"
#include "monopose/rotation.hpp"
#include "monopose/simulate.hpp"
#include "monopose/track_io.hpp"
#include "monopose/track_types.hpp"
#include "monopose/translation.hpp"
