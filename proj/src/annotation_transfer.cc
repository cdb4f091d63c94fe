#include "partmatch/annotation_transfer.h"

#include <algorithm>
#include <numeric>

#include "partmatch/error.h"

namespace partmatch {

TransferResult transfer_point_with_support(const Vec2& p, const MatchSet& m, int k) {
  if (m.pairs.empty()) {
    throw Error(ErrorCode::kNoSupport, "cannot transfer a point through an empty match set");
  }
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "transfer neighbor count must be >= 1");

  const std::size_t n = m.pairs.size();
  std::vector<double> dist(n);
  for (std::size_t i = 0; i < n; ++i) dist[i] = (m.pairs[i].src_px - p).norm();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(k), n);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                    [&](int a, int b) { return dist[a] != dist[b] ? dist[a] < dist[b] : a < b; });

  TransferResult out;
  double total = 0.0;
  for (std::size_t i = 0; i < take; ++i) {
    const double w = 1.0 / std::max(dist[order[i]], kTransferDistanceFloor);
    out.support.push_back({order[i], w});
    total += w;
  }
  Vec2 shift = Vec2::Zero();
  for (TransferSupport& s : out.support) {
    s.weight /= total;
    const MatchPair& pair = m.pairs[static_cast<std::size_t>(s.pair_index)];
    shift += s.weight * (pair.dst_px - pair.src_px);
  }
  out.point = p + shift;
  return out;
}

Vec2 transfer_point(const Vec2& p, const MatchSet& m, int k) {
  return transfer_point_with_support(p, m, k).point;
}

TransferredAnnotation transfer_box(const PartAnnotation& ann, const MatchSet& m, int k) {
  TransferResult moved = transfer_point_with_support(ann.box.center(), m, k);
  TransferredAnnotation out;
  out.part_id = ann.part_id;
  out.box = Box::centered(moved.point, ann.box.width(), ann.box.height());
  out.support = std::move(moved.support);
  out.source_image_id = m.source_id;
  return out;
}

}  // namespace partmatch
