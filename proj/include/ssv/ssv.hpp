#pragma once

// Umbrella header for the sentiment-driven stochastic volatility toolkit.

#include "ssv/bootstrap.hpp"
#include "ssv/classifier.hpp"
#include "ssv/csv.hpp"
#include "ssv/data_io.hpp"
#include "ssv/errors.hpp"
#include "ssv/exppoly.hpp"
#include "ssv/kde.hpp"
#include "ssv/model.hpp"
#include "ssv/moments.hpp"
#include "ssv/moments_ode.hpp"
#include "ssv/nelder_mead.hpp"
#include "ssv/npsmle.hpp"
#include "ssv/params.hpp"
#include "ssv/rng.hpp"
#include "ssv/sentiment_bars.hpp"
#include "ssv/simulate.hpp"
#include "ssv/text.hpp"
#include "ssv/timestamps.hpp"
