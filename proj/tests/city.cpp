#include "city.hpp"

namespace testsupport {

using namespace urbanprof;

CityRun analyse_city(const CityScenario& scenario, const SyntheticCity& city, bool cluster) {
  const Grid grid(scenario.grid);
  const auto& mapping = CategoryMapping::defaults();
  CityRun run;
  const auto relevant = filter_relevant(city.pois, mapping);
  const auto counts = count_pois(grid, relevant);
  const auto plan = plan_aggregation(grid, counts, AggregationParams{});
  run.profiles = build_profiles(plan, counts, mapping);
  if (cluster) {
    SpectralOptions options;
    options.seed = scenario.seed;
    run.model = spectral_cluster(run.profiles, options);
  }
  const auto tensor = build_tensor(city.cdr, grid.cell_count(), scenario.month);
  run.timelines = zscore(tensor);
  run.features = timeline_features(run.timelines, FeatureMode::mean_day, scenario.month);
  return run;
}

}  // namespace testsupport
