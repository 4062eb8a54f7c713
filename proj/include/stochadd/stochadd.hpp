#pragma once

#include "stochadd/error.hpp"
#include "stochadd/io.hpp"
#include "stochadd/julia.hpp"
#include "stochadd/multiprecision.hpp"
#include "stochadd/machine.hpp"
#include "stochadd/numeration.hpp"
#include "stochadd/presets.hpp"
#include "stochadd/renormalization.hpp"
#include "stochadd/spectrum.hpp"
