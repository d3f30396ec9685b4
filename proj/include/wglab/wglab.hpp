#pragma once

/// @file wglab.hpp
/// Umbrella header.

#include "core_arith.hpp"
#include "fft.hpp"
#include "local_structure.hpp"
#include "majorant.hpp"
#include "parallel.hpp"
#include "representation.hpp"
#include "spectral.hpp"
