#pragma once

// Umbrella header for the whole simulator.

#include "ssosim/browser.hpp"
#include "ssosim/csrf_guard.hpp"
#include "ssosim/document.hpp"
#include "ssosim/http.hpp"
#include "ssosim/idp.hpp"
#include "ssosim/listing.hpp"
#include "ssosim/report.hpp"
#include "ssosim/rng.hpp"
#include "ssosim/router.hpp"
#include "ssosim/rp.hpp"
#include "ssosim/scenario.hpp"
#include "ssosim/world.hpp"
