#include "partmatch/viewpoint_search.h"

#include <cmath>
#include <limits>

#include "partmatch/error.h"
#include "partmatch/parallel.h"

namespace partmatch {
namespace {

double grid_diagonal(const FeatureGrid& g) {
  const double w = g.meta().width > 0 ? g.meta().width : g.cols() * g.stride();
  const double h = g.meta().height > 0 ? g.meta().height : g.rows() * g.stride();
  return std::hypot(w, h);
}

// Energies this close are ties, so rounding from rescaled weights cannot
// flip the winner.
bool beats(double e, double best) {
  if (best == -std::numeric_limits<double>::infinity()) return e > best;
  return e > best + 1e-12 * std::max(1.0, std::abs(best));
}

}  // namespace

void ViewpointEnergyConfig::validate() const {
  if (!(lambda >= 0.0 && mu >= 0.0 && gamma >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "energy weights must be >= 0");
  }
  if (coarse_azimuths.empty()) throw Error(ErrorCode::kInvalidArgument, "no coarse azimuths");
  if (!(fine_step > 0.0) || !(fine_window >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "fine step must be > 0 and window >= 0");
  }
  const double steps = fine_window / fine_step;
  if (std::abs(steps - std::round(steps)) > 1e-9) {
    throw Error(ErrorCode::kInvalidArgument, "fine step must divide the fine window");
  }
}

EnergyTerms energy_terms(const MatchSet& m, const FeatureGrid& a, const FeatureGrid& b) {
  EnergyTerms t;
  t.pairs = static_cast<int>(m.size());
  if (m.empty()) return t;
  if (a.dim() != b.dim()) throw Error(ErrorCode::kDimMismatch, "grids differ in descriptor dim");
  const double diag = grid_diagonal(a);
  for (const MatchPair& p : m.pairs) {
    const auto u = a.cell(p.src.row, p.src.col);
    const auto v = b.cell(p.dst.row, p.dst.col);
    double dot = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) dot += static_cast<double>(u[k]) * v[k];
    t.similarity += dot;
    t.distance += (p.src_px - p.dst_px).norm() / diag;
  }
  t.distance /= static_cast<double>(m.size());

  std::size_t count = 0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = i + 1; j < m.size(); ++j) {
      const Vec2 va = m.pairs[j].src_px - m.pairs[i].src_px;
      const Vec2 vb = m.pairs[j].dst_px - m.pairs[i].dst_px;
      const double na = va.norm(), nb = vb.norm();
      // Degenerate direction vectors count as orthogonal.
      if (na > 0.0 && nb > 0.0) t.direction += va.dot(vb) / (na * nb);
      ++count;
    }
  }
  if (count > 0) t.direction /= static_cast<double>(count);
  return t;
}

double combine_energy(const EnergyTerms& t, const ViewpointEnergyConfig& cfg) {
  if (t.pairs == 0) return -std::numeric_limits<double>::infinity();
  return cfg.lambda * t.similarity - cfg.mu * t.distance + cfg.gamma * t.direction;
}

double viewpoint_energy(const MatchSet& m, const FeatureGrid& a, const FeatureGrid& b,
                        const ViewpointEnergyConfig& cfg) {
  return combine_energy(energy_terms(m, a, b), cfg);
}

ViewpointPrediction predict_viewpoint(const FeatureGrid& test, const FeatureGrid* test_fine,
                                      const ReferenceRenderer& renderer, const Viewpoint& base,
                                      const ViewpointEnergyConfig& cfg,
                                      const MatchConfig& match_cfg, int jobs) {
  cfg.validate();
  match_cfg.validate();

  const auto evaluate = [&](std::vector<double> azimuths, bool fine) {
    std::vector<CandidateEnergy> out(azimuths.size());
    parallel_for(azimuths.size(), jobs, [&](std::size_t i) {
      Viewpoint vp = base;
      vp.azimuth = normalize_azimuth(azimuths[i]);
      const ReferenceView ref = renderer(vp.validated());
      const bool refine = test_fine && ref.fine;
      const MatchSet m = match_images(test, ref.coarse, refine ? test_fine : nullptr,
                                      refine ? &*ref.fine : nullptr, match_cfg);
      CandidateEnergy& c = out[i];
      c.azimuth = vp.azimuth;
      c.fine = fine;
      c.matches = static_cast<int>(m.size());
      c.terms = energy_terms(m, test, ref.coarse);
      c.energy = combine_energy(c.terms, cfg);
    });
    return out;
  };
  const auto argmax = [](const std::vector<CandidateEnergy>& cands) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < cands.size(); ++i) {
      const CandidateEnergy& c = cands[i];
      const CandidateEnergy& b = cands[best];
      if (beats(c.energy, b.energy) || (!beats(b.energy, c.energy) && c.azimuth < b.azimuth)) {
        best = i;
      }
    }
    return best;
  };

  ViewpointPrediction out;
  out.candidates = evaluate(cfg.coarse_azimuths, false);
  const CandidateEnergy coarse = out.candidates[argmax(out.candidates)];
  if (coarse.energy == -std::numeric_limits<double>::infinity()) {
    throw Error(ErrorCode::kNoViewpoint, "no reference viewpoint produced any matches");
  }

  // Offsets stay inside winner +- window / 2.
  const int half_steps = static_cast<int>(std::floor(0.5 * cfg.fine_window / cfg.fine_step + 1e-9));
  std::vector<double> fine_azimuths;
  for (int k = -half_steps; k <= half_steps; ++k) fine_azimuths.push_back(coarse.azimuth + k * cfg.fine_step);
  std::vector<CandidateEnergy> fine = evaluate(fine_azimuths, true);
  const CandidateEnergy winner = fine[argmax(fine)];
  out.candidates.insert(out.candidates.end(), fine.begin(), fine.end());

  out.viewpoint = base;
  out.viewpoint.azimuth = winner.azimuth;
  out.energy = winner.energy;
  return out;
}

nlohmann::json to_json(const ViewpointPrediction& p) {
  nlohmann::json cands = nlohmann::json::array();
  for (const CandidateEnergy& c : p.candidates) {
    const bool finite = std::isfinite(c.energy);
    cands.push_back({{"azimuth", c.azimuth},
                     {"stage", c.fine ? "fine" : "coarse"},
                     {"matches", c.matches},
                     {"similarity", c.terms.similarity},
                     {"distance", c.terms.distance},
                     {"direction", c.terms.direction},
                     {"energy", finite ? nlohmann::json(c.energy) : nlohmann::json(nullptr)}});
  }
  return {{"azimuth", p.viewpoint.azimuth},
          {"elevation", p.viewpoint.elevation},
          {"energy", p.energy},
          {"candidates", std::move(cands)}};
}

}  // namespace partmatch
