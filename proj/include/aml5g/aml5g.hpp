#pragma once

// Everything in one include.

#include <aml5g/defense.hpp>
#include <aml5g/error.hpp>
#include <aml5g/gan.hpp>
#include <aml5g/harness.hpp>
#include <aml5g/neural.hpp>
#include <aml5g/random.hpp>
#include <aml5g/scenario1.hpp>
#include <aml5g/scenario2.hpp>
#include <aml5g/signal.hpp>
