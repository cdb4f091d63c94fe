#pragma once

#include <optional>
#include <vector>

#include <json.hpp>

#include "partmatch/clique_matcher.h"
#include "partmatch/feature_grid.h"
#include "partmatch/reference_renderer.h"

namespace partmatch {

struct ViewpointEnergyConfig {
  double lambda = 1.0;
  double mu = 1.0;
  double gamma = 1.0;
  std::vector<double> coarse_azimuths{0, 45, 90, 135, 180, 225, 270, 315};
  double fine_step = 10.0;
  // Full width of the fine scan, centered on the coarse winner.
  double fine_window = 90.0;

  void validate() const;
};

// The three weight-free sums of the energy: summed inner products, mean
// diagonal-normalized pixel distance, mean cosine between the direction
// vectors of every two pairs.
struct EnergyTerms {
  int pairs = 0;
  double similarity = 0.0;
  double distance = 0.0;
  double direction = 0.0;
};

EnergyTerms energy_terms(const MatchSet& m, const FeatureGrid& a, const FeatureGrid& b);
// -infinity for an empty match set.
double combine_energy(const EnergyTerms& t, const ViewpointEnergyConfig& cfg);
double viewpoint_energy(const MatchSet& m, const FeatureGrid& a, const FeatureGrid& b,
                        const ViewpointEnergyConfig& cfg);

struct CandidateEnergy {
  double azimuth = 0.0;
  bool fine = false;  // stage that evaluated it
  int matches = 0;
  EnergyTerms terms;
  double energy = 0.0;
};

struct ViewpointPrediction {
  Viewpoint viewpoint;
  double energy = 0.0;
  std::vector<CandidateEnergy> candidates;
};

// Coarse scan over cfg.coarse_azimuths, then a fine scan of the window
// around the winner. Elevation, distance and intrinsics come from `base`.
// Ties go to the smaller azimuth. Throws kNoViewpoint when every candidate
// has an empty match set.
ViewpointPrediction predict_viewpoint(const FeatureGrid& test, const FeatureGrid* test_fine,
                                      const ReferenceRenderer& renderer, const Viewpoint& base,
                                      const ViewpointEnergyConfig& cfg,
                                      const MatchConfig& match_cfg, int jobs = 1);

nlohmann::json to_json(const ViewpointPrediction& p);

}  // namespace partmatch
