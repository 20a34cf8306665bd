#pragma once

#include "pqa/circuit.hpp"
#include "pqa/dynamics.hpp"
#include "pqa/encoding.hpp"
#include "pqa/harness.hpp"
#include "pqa/parse.hpp"
#include "pqa/print.hpp"
#include "pqa/statics.hpp"
#include "pqa/syntax.hpp"
