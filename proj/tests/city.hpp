#pragma once

// Runs a synthetic city through the library stages the way the CLI does,
// without touching the filesystem.

#include "urbanprof/activity_profiles.hpp"
#include "urbanprof/spectral.hpp"
#include "urbanprof/synth.hpp"
#include "urbanprof/timeline.hpp"

namespace testsupport {

struct CityRun {
  urbanprof::ActivityProfileMatrix profiles;
  urbanprof::ClusterModel model;       // empty unless clustering was requested
  urbanprof::NormalizedTimeline timelines;
  urbanprof::Matrix features;          // mean-day timeline features, all cells
};

CityRun analyse_city(const urbanprof::CityScenario& scenario, const urbanprof::SyntheticCity& city,
                     bool cluster = true);

}  // namespace testsupport
