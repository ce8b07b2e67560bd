#pragma once

#include "adversarial.hpp"
#include "config.hpp"
#include "contrast.hpp"
#include "datagen.hpp"
#include "experiment.hpp"
#include "federation.hpp"
#include "finch.hpp"
#include "model.hpp"
#include "rng.hpp"
#include "signals.hpp"
#include "tensor.hpp"
