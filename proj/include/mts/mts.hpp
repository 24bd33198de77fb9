#pragma once

#include "mts/core.hpp"
#include "mts/descent.hpp"
#include "mts/extremality.hpp"
#include "mts/hilbert_schmidt.hpp"
#include "mts/marginal.hpp"
#include "mts/schmidt.hpp"
#include "mts/serialize.hpp"
